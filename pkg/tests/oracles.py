"""Independent brute-force reference implementations.

Everything here is written as plain loops over the defining formulas, on
purpose: these are the values the library must reproduce, derived without
sharing any code path with it (different decomposition routine for PCA,
explicit summation everywhere else).
"""

from __future__ import annotations

import math

import numpy as np


def oracle_effect_info(probs, s: int, e: int) -> float:
    n_states = len(probs)
    p = probs[s][e]
    if p == 0.0:
        return 0.0
    pi = sum(probs[sp][e] for sp in range(n_states)) / n_states
    return p * math.log2(p / pi)


def oracle_cause_info(probs, s: int, c: int) -> float:
    n_states = len(probs)
    column = [probs[cp][s] for cp in range(n_states)]
    total = sum(column)
    if total == 0.0 or probs[c][s] == 0.0:
        return 0.0
    p_back = probs[c][s] / total
    pi = total / n_states
    return p_back * math.log2(probs[c][s] / pi)


def oracle_intrinsic(probs, s: int, rule: str = "sum") -> dict:
    n_states = len(probs)
    effects = [oracle_effect_info(probs, s, e) for e in range(n_states)]
    causes = [oracle_cause_info(probs, s, c) for c in range(n_states)]
    best_e = effects.index(max(effects))
    best_c = causes.index(max(causes))
    ii_e, ii_c = effects[best_e], causes[best_c]
    combined = ii_c + ii_e if rule == "sum" else max(ii_c, ii_e)
    return {
        "ii_effect": ii_e,
        "ii_cause": ii_c,
        "best_effect": best_e,
        "best_cause": best_c,
        "combined": combined,
    }


def oracle_attention(prompt: np.ndarray, output: np.ndarray) -> np.ndarray:
    d = output.shape[1]
    rows = []
    for q in output:
        scores = [float(q @ k) / math.sqrt(d) for k in prompt]
        m = max(scores)
        weights = [math.exp(x - m) for x in scores]
        z = sum(weights)
        attended = sum(w / z * v for w, v in zip(weights, prompt))
        rows.append(q + attended)
    return np.array(rows)


def oracle_pca_states(vectors: np.ndarray, fit: np.ndarray, n_units: int) -> list[int]:
    """Same contract as the library's reduction, via SVD instead of an
    eigendecomposition of the covariance."""
    mean = fit.mean(axis=0)
    _, _, vt = np.linalg.svd(fit - mean, full_matrices=False)
    comps = vt[:n_units]
    fixed = []
    for comp in comps:
        nz = comp[np.abs(comp) > 1e-12]
        fixed.append(-comp if len(nz) and nz[0] < 0 else comp)
    comps = np.array(fixed)
    fit_proj = (fit - mean) @ comps.T
    thresholds = fit_proj.mean(axis=0)
    proj = (vectors - mean) @ comps.T
    states = []
    for row in proj:
        s = 0
        for j in range(n_units):
            if row[j] > thresholds[j]:
                s |= 1 << j
        states.append(s)
    return states


def oracle_tpm(sequences: list[list[int]], n_units: int) -> tuple[list[list[int]], list[list[float]]]:
    size = 2**n_units
    counts = [[0] * size for _ in range(size)]
    for seq in sequences:
        for a, b in zip(seq, seq[1:]):
            counts[a][b] += 1
    probs = []
    for row in counts:
        total = sum(row)
        if total == 0:
            probs.append([1.0 / size] * size)
        else:
            probs.append([c / total for c in row])
    return counts, probs


def _oracle_part_tpm(probs, units: list[int], n_units: int) -> list[list[float]]:
    others = [u for u in range(n_units) if u not in units]
    size = 2 ** len(units)
    out = [[0.0] * size for _ in range(size)]
    for p in range(size):
        for q in range(2 ** len(others)):
            state = 0
            for j, u in enumerate(units):
                state |= (p >> j & 1) << u
            for j, u in enumerate(others):
                state |= (q >> j & 1) << u
            for nxt in range(2**n_units):
                np_part = 0
                for j, u in enumerate(units):
                    np_part |= (nxt >> u & 1) << j
                out[p][np_part] += probs[state][nxt]
        for e in range(size):
            out[p][e] /= 2 ** len(others)
    return out


def oracle_phi(probs, s: int, n_units: int) -> float:
    """Exhaustive bipartition search with product-of-marginals cut TPMs."""
    size = 2**n_units
    best = oracle_intrinsic(probs, s)
    e_star, c_star = best["best_effect"], best["best_cause"]
    p_e = probs[s][e_star]
    col = sum(probs[c][s] for c in range(size))
    p_c = probs[c_star][s] / col if col > 0 else 0.0

    seen = set()
    cut_values = []
    for mask in range(1, size - 1):
        part_a = [u for u in range(n_units) if mask >> u & 1]
        part_b = [u for u in range(n_units) if not mask >> u & 1]
        if not part_a or not part_b:
            continue
        key = frozenset((frozenset(part_a), frozenset(part_b)))
        if key in seen:
            continue
        seen.add(key)
        t_a = _oracle_part_tpm(probs, part_a, n_units)
        t_b = _oracle_part_tpm(probs, part_b, n_units)

        def cut_prob(x, y):
            def sub(state, units):
                v = 0
                for j, u in enumerate(units):
                    v |= (state >> u & 1) << j
                return v

            return (
                t_a[sub(x, part_a)][sub(y, part_a)] * t_b[sub(x, part_b)][sub(y, part_b)]
            )

        pe_cut = cut_prob(s, e_star)
        phi_e = p_e * math.log2(p_e / max(pe_cut, 1e-12)) if p_e > 0 else 0.0
        col_cut = sum(cut_prob(c, s) for c in range(size))
        pc_cut = cut_prob(c_star, s) / col_cut if col_cut > 0 else 0.0
        phi_c = p_c * math.log2(p_c / max(pc_cut, 1e-12)) if p_c > 0 else 0.0
        cut_values.append(min(phi_c, phi_e))
    if not cut_values:
        return 0.0
    return max(0.0, min(cut_values))


def oracle_entropy_bits(dist) -> float:
    return -sum(p * math.log2(p) for p in dist if p > 0.0)


def oracle_majority(answers: list[str]) -> str:
    counts: dict[str, int] = {}
    for a in answers:
        counts[a] = counts.get(a, 0) + 1
    best = max(counts.values())
    for a in answers:
        if counts[a] == best:
            return a
    raise AssertionError


def oracle_ece_mce(samples: list[tuple[float, int]], n_bins: int = 10) -> tuple[float, float]:
    """Literal right-closed binning: first b with b/n < c <= (b+1)/n, and
    c = 0 in the first bin. Feed it confidences away from bin edges."""
    bins = [[] for _ in range(n_bins)]
    for conf, correct in samples:
        if conf <= 0.0:
            bins[0].append((conf, correct))
            continue
        for b in range(n_bins):
            if b / n_bins < conf <= (b + 1) / n_bins:
                bins[b].append((conf, correct))
                break
    n = len(samples)
    ece = 0.0
    mce = 0.0
    for members in bins:
        if not members:
            continue
        conf = sum(c for c, _ in members) / len(members)
        acc = sum(k for _, k in members) / len(members)
        gap = abs(acc - conf)
        ece += len(members) / n * gap
        mce = max(mce, gap)
    return ece, mce


def random_tpm(rng: np.random.Generator, n_units: int, sparse: bool = False) -> np.ndarray:
    """Row-stochastic matrix; optionally with zeroed entries to exercise
    the 0 * log 0 branches."""
    size = 2**n_units
    raw = rng.gamma(1.0, 1.0, size=(size, size))
    if sparse:
        mask = rng.random((size, size)) < 0.4
        raw = raw * mask
        for row in raw:
            if row.sum() == 0.0:
                row[rng.integers(size)] = 1.0
    return raw / raw.sum(axis=1, keepdims=True)
