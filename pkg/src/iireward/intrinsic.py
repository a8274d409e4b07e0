"""Intrinsic cause/effect information of a state under a TPM.

Each quantity is selectivity times informativeness, in bits. On the effect
side the constrained probability is the forward transition probability; on
the cause side it is the Bayes inversion of the forward probability under a
uniform prior over causes. Unconstrained probabilities average the forward
matrix over all 2^n initial states, never-observed (uniform) rows included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError
from .tpm import TransitionProbabilityMatrix

COMBINE_SUM = "sum"
COMBINE_MAX = "max"


@dataclass(frozen=True)
class IntrinsicInfoResult:
    state: int
    ii_cause: float
    ii_effect: float
    best_cause: int
    best_effect: int
    combined: float
    combine_rule: str


def _check_state(tpm: TransitionProbabilityMatrix, value: int, name: str) -> None:
    if not 0 <= value < tpm.n_states:
        raise InvalidInputError(f"{name}={value} out of range for n_units={tpm.n_units}")


def effect_info(tpm: TransitionProbabilityMatrix, s: int, e: int) -> float:
    """p(e|s) * log2(p(e|s) / pi(e)), with the 0*log0 := 0 convention."""
    _check_state(tpm, s, "s")
    _check_state(tpm, e, "e")
    p = tpm.probs[s, e]
    if p <= 0.0:
        return 0.0
    unconstrained = tpm.probs[:, e].mean()
    return float(p * math.log2(p / unconstrained))


def cause_info(tpm: TransitionProbabilityMatrix, s: int, c: int) -> float:
    """Backward-constrained selectivity times cause informativeness.

    p_back(c|s) = p(s|c) / sum_c' p(s|c') is the Bayes inversion under a
    uniform prior over causes; informativeness compares p(s|c) against the
    column average pi(s). Unreachable states (zero column) score 0 for
    every candidate cause.
    """
    _check_state(tpm, s, "s")
    _check_state(tpm, c, "c")
    column_sum = tpm.probs[:, s].sum()
    if column_sum <= 0.0:
        return 0.0
    p_forward = tpm.probs[c, s]
    if p_forward <= 0.0:
        return 0.0
    p_back = p_forward / column_sum
    unconstrained = column_sum / tpm.n_states
    return float(p_back * math.log2(p_forward / unconstrained))


def intrinsic_info(
    tpm: TransitionProbabilityMatrix, s: int, combine_rule: str = COMBINE_SUM
) -> IntrinsicInfoResult:
    """Maximize cause and effect information over all candidate states.

    Ties in the argmax go to the smallest state index, so results are
    deterministic for any TPM.
    """
    if combine_rule not in (COMBINE_SUM, COMBINE_MAX):
        raise ConfigError(f"unknown combine rule {combine_rule!r}")
    _check_state(tpm, s, "s")
    effect_values = np.array([effect_info(tpm, s, e) for e in range(tpm.n_states)])
    cause_values = np.array([cause_info(tpm, s, c) for c in range(tpm.n_states)])
    best_effect = int(np.argmax(effect_values))
    best_cause = int(np.argmax(cause_values))
    ii_effect = float(effect_values[best_effect])
    ii_cause = float(cause_values[best_cause])
    if combine_rule == COMBINE_SUM:
        combined = ii_cause + ii_effect
    else:
        combined = max(ii_cause, ii_effect)
    return IntrinsicInfoResult(
        state=s,
        ii_cause=ii_cause,
        ii_effect=ii_effect,
        best_cause=best_cause,
        best_effect=best_effect,
        combined=combined,
        combine_rule=combine_rule,
    )


def sequence_ii_total(
    tpm: TransitionProbabilityMatrix, states: list[int], combine_rule: str = COMBINE_SUM
) -> float:
    """Sum of combined intrinsic information over a state sequence."""
    cache: dict[int, float] = {}
    total = 0.0
    for s in states:
        if s not in cache:
            cache[s] = intrinsic_info(tpm, s, combine_rule).combined
        total += cache[s]
    return total
