"""System integrated information for small binary systems (n <= 3).

phi_s is the minimum, over canonical bipartitions, of the loss in cause and
effect information when the TPM is replaced by the product of the marginal
TPMs of the two parts. The optimal cause/effect states of the whole system
are held fixed under each cut, so phi measures how much the cut changes the
probability assigned to what the intact system actually specifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionalityLimitError, InvalidInputError
from .intrinsic import intrinsic_info
from .tpm import TransitionProbabilityMatrix

# Floor for cut probabilities that underflow to exactly zero while the
# intact probability is positive. Cannot occur for product-of-marginals
# cuts built from a row-stochastic TPM, but kept as a guard so the log
# never sees a zero denominator.
CUT_PROBABILITY_FLOOR = 1e-12

MAX_PHI_UNITS = 3


@dataclass(frozen=True)
class Bipartition:
    """Ordered bipartition of unit indices; part_a always holds unit 0."""

    part_a: tuple[int, ...]
    part_b: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.part_a or not self.part_b:
            raise InvalidInputError("bipartition parts must be nonempty")
        units = sorted(self.part_a + self.part_b)
        if units != list(range(len(units))):
            raise InvalidInputError("bipartition must cover units 0..n-1 exactly once")
        if 0 not in self.part_a:
            raise InvalidInputError("canonical bipartitions keep unit 0 in part_a")

    def label(self) -> str:
        a = ",".join(str(u) for u in self.part_a)
        b = ",".join(str(u) for u in self.part_b)
        return f"[{a}|{b}]"


@dataclass(frozen=True)
class PhiResult:
    state: int
    phi_s: float
    mip: Bipartition | None
    per_partition: dict[Bipartition, tuple[float, float]] = field(default_factory=dict)
    clamped: bool = False


def enumerate_bipartitions(n_units: int) -> list[Bipartition]:
    """All 2^(n-1) - 1 bipartitions with unit 0 on the A side."""
    cuts = []
    full = (1 << n_units) - 1
    for mask in range(1, full, 2):
        part_a = tuple(u for u in range(n_units) if mask >> u & 1)
        part_b = tuple(u for u in range(n_units) if not mask >> u & 1)
        cuts.append(Bipartition(part_a, part_b))
    return cuts


def _part_state(state: int, units: tuple[int, ...]) -> int:
    bits = 0
    for j, u in enumerate(units):
        bits |= (state >> u & 1) << j
    return bits


def _embed(part_state: int, units: tuple[int, ...]) -> int:
    state = 0
    for j, u in enumerate(units):
        state |= (part_state >> j & 1) << u
    return state


def _marginal_tpm(tpm: TransitionProbabilityMatrix, units: tuple[int, ...]) -> np.ndarray:
    """Part TPM: next-part distribution from each part state, averaged
    uniformly over the states of the complementary units."""
    others = tuple(u for u in range(tpm.n_units) if u not in units)
    size = 1 << len(units)
    out = np.zeros((size, size))
    for p in range(size):
        base = _embed(p, units)
        for q in range(1 << len(others)):
            row = tpm.probs[base | _embed(q, others)]
            for nxt in range(tpm.n_states):
                out[p, _part_state(nxt, units)] += row[nxt]
        out[p] /= 1 << len(others)
    return out


def partitioned_tpm(
    tpm: TransitionProbabilityMatrix, cut: Bipartition
) -> TransitionProbabilityMatrix:
    """Product-of-marginals TPM for a bipartition (the cut renders the
    parts conditionally independent)."""
    if tpm.n_units > MAX_PHI_UNITS:
        raise DimensionalityLimitError(
            f"partitioned TPMs are limited to n_units <= {MAX_PHI_UNITS}"
        )
    t_a = _marginal_tpm(tpm, cut.part_a)
    t_b = _marginal_tpm(tpm, cut.part_b)
    probs = np.zeros((tpm.n_states, tpm.n_states))
    for s in range(tpm.n_states):
        sa = _part_state(s, cut.part_a)
        sb = _part_state(s, cut.part_b)
        for e in range(tpm.n_states):
            probs[s, e] = t_a[sa, _part_state(e, cut.part_a)] * t_b[
                sb, _part_state(e, cut.part_b)
            ]
    counts = np.zeros((tpm.n_states, tpm.n_states), dtype=np.int64)
    return TransitionProbabilityMatrix(
        n_units=tpm.n_units, probs=probs, counts=counts, observed_rows=0
    )


def _backward(probs: np.ndarray, c: int, s: int) -> float:
    column_sum = probs[:, s].sum()
    if column_sum <= 0.0:
        return 0.0
    return float(probs[c, s] / column_sum)


def _directional_loss(p_whole: float, p_cut: float) -> tuple[float, bool]:
    """p * log2(p / p_cut) with a floor on p_cut; returns (loss, clamped)."""
    if p_whole <= 0.0:
        return 0.0, False
    if p_cut < CUT_PROBABILITY_FLOOR:
        return float(p_whole * math.log2(p_whole / CUT_PROBABILITY_FLOOR)), True
    return float(p_whole * math.log2(p_whole / p_cut)), False


def phi_system(tpm: TransitionProbabilityMatrix, s: int) -> PhiResult:
    """Minimum cause/effect information loss over canonical bipartitions,
    floored at zero. Single-unit systems have no bipartition and score 0."""
    if tpm.n_units > MAX_PHI_UNITS:
        raise DimensionalityLimitError(
            f"phi_system is limited to n_units <= {MAX_PHI_UNITS}"
        )
    if not 0 <= s < tpm.n_states:
        raise InvalidInputError(f"s={s} out of range for n_units={tpm.n_units}")
    if tpm.n_units == 1:
        return PhiResult(state=s, phi_s=0.0, mip=None)

    whole = intrinsic_info(tpm, s)
    e_star, c_star = whole.best_effect, whole.best_cause
    p_effect = float(tpm.probs[s, e_star])
    p_cause = _backward(tpm.probs, c_star, s)

    per_partition: dict[Bipartition, tuple[float, float]] = {}
    clamped = False
    best: float | None = None
    mip: Bipartition | None = None
    for cut in enumerate_bipartitions(tpm.n_units):
        cut_probs = partitioned_tpm(tpm, cut).probs
        phi_e, ce = _directional_loss(p_effect, float(cut_probs[s, e_star]))
        phi_c, cc = _directional_loss(p_cause, _backward(cut_probs, c_star, s))
        clamped = clamped or ce or cc
        per_partition[cut] = (phi_c, phi_e)
        value = min(phi_c, phi_e)
        if best is None or value < best:
            best = value
            mip = cut
    assert best is not None
    return PhiResult(
        state=s,
        phi_s=max(0.0, best),
        mip=mip,
        per_partition=per_partition,
        clamped=clamped,
    )


def sequence_phi_total(tpm: TransitionProbabilityMatrix, states: list[int]) -> float:
    """Sum of phi_s over a state sequence, with per-state caching."""
    cache: dict[int, float] = {}
    total = 0.0
    for s in states:
        if s not in cache:
            cache[s] = phi_system(tpm, s).phi_s
        total += cache[s]
    return total
