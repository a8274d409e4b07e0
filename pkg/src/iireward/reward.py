"""Trajectory rewards from per-state information totals.

Raw totals are unbounded above (they grow with sequence length), so they
pass through a saturating exponential map 1 - exp(-raw / tau) before use;
tau sets the scale at which the reward saturates. Accuracy enters as an
additive binary term, never scaled by the shaping weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, RewardFlagWarning
from .intrinsic import COMBINE_SUM, sequence_ii_total
from .phi import sequence_phi_total
from .tpm import TransitionProbabilityMatrix

KIND_II = "ii"
KIND_PHI = "phi"
KIND_ACCURACY = "accuracy"
KIND_ENTROPY_MIN = "entropy_min"
KIND_II_PLUS_ACCURACY = "ii_plus_accuracy"

REWARD_KINDS = (KIND_II, KIND_PHI, KIND_ACCURACY, KIND_ENTROPY_MIN, KIND_II_PLUS_ACCURACY)

FLAG_EMPTY_SEQUENCE = "empty-sequence"
FLAG_NEGATIVE_RAW = "negative-raw"
FLAG_DEGENERATE_SCOPE = "degenerate-scope"


@dataclass(frozen=True)
class RewardConfig:
    kind: str = KIND_II
    combine_rule: str = COMBINE_SUM
    tau: float = 1.0
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in REWARD_KINDS:
            raise ConfigError(f"unknown reward kind {self.kind!r}")
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.weight < 0.0:
            raise ConfigError(f"weight must be nonnegative, got {self.weight}")


@dataclass(frozen=True)
class RewardBreakdown:
    trajectory_id: str
    kind: str
    raw: float
    shaped: float
    accuracy: float
    entropy_term: float
    total: float
    flags: tuple[str, ...] = ()


def shape(raw: float, tau: float) -> float:
    """Bounded reward in [0, 1]; negative raw totals clamp to 0 with a
    warning since both information totals are nonnegative by construction."""
    if not tau > 0.0:
        raise ConfigError(f"tau must be positive, got {tau}")
    if raw < 0.0:
        warnings.warn("negative raw total clamped to 0", RewardFlagWarning, stacklevel=2)
        raw = 0.0
    # expm1 keeps tiny raw totals distinguishable from zero
    return -math.expm1(-raw / tau)


def phi_reward(
    tpm: TransitionProbabilityMatrix, states: list[int], tau: float = 1.0
) -> float:
    """Shaped sum of per-state phi_s over a sequence."""
    return shape(sequence_phi_total(tpm, states), tau)


def entropy_reward(token_distributions: list[np.ndarray]) -> float:
    """Negated mean Shannon entropy (bits) of next-token distributions, so
    maximizing the reward minimizes average entropy."""
    if len(token_distributions) == 0:
        raise InvalidInputError("entropy reward needs at least one distribution")
    entropies = []
    for dist in token_distributions:
        p = np.asarray(dist, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("each token distribution must be a nonempty vector")
        if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidInputError("token distributions must be valid probabilities")
        nz = p[p > 0.0]
        entropies.append(float(-(nz * np.log2(nz)).sum()))
    return -float(np.mean(entropies))


def trajectory_reward(
    tpm: TransitionProbabilityMatrix,
    states: list[int],
    config: RewardConfig,
    accuracy: float = 0.0,
    token_distributions: list[np.ndarray] | None = None,
    trajectory_id: str = "",
) -> RewardBreakdown:
    """Score one trajectory's binary-state sequence under a fixed TPM."""
    if accuracy not in (0, 1, 0.0, 1.0):
        raise InvalidInputError(f"accuracy must be 0 or 1, got {accuracy}")
    accuracy = float(accuracy)
    if len(states) == 0:
        warnings.warn("empty state sequence scores zero", RewardFlagWarning, stacklevel=2)
        return RewardBreakdown(
            trajectory_id=trajectory_id,
            kind=config.kind,
            raw=0.0,
            shaped=0.0,
            accuracy=accuracy,
            entropy_term=0.0,
            total=0.0,
            flags=(FLAG_EMPTY_SEQUENCE,),
        )

    flags: list[str] = []
    raw = 0.0
    shaped = 0.0
    entropy_term = 0.0
    if config.kind in (KIND_II, KIND_II_PLUS_ACCURACY):
        raw = sequence_ii_total(tpm, states, config.combine_rule)
    elif config.kind == KIND_PHI:
        raw = sequence_phi_total(tpm, states)
    elif config.kind == KIND_ENTROPY_MIN:
        if token_distributions is None:
            raise InvalidInputError("entropy_min rewards need token distributions")
        entropy_term = entropy_reward(token_distributions)

    if raw < 0.0:
        flags.append(FLAG_NEGATIVE_RAW)
        raw_for_shaping = 0.0
    else:
        raw_for_shaping = raw
    if config.kind in (KIND_II, KIND_PHI, KIND_II_PLUS_ACCURACY):
        shaped = -math.expm1(-raw_for_shaping / config.tau)

    if config.kind == KIND_ACCURACY:
        total = accuracy
    elif config.kind == KIND_II:
        total = config.weight * shaped
    elif config.kind == KIND_PHI:
        total = config.weight * shaped
    elif config.kind == KIND_II_PLUS_ACCURACY:
        total = accuracy + config.weight * shaped
    else:
        total = config.weight * entropy_term
    return RewardBreakdown(
        trajectory_id=trajectory_id,
        kind=config.kind,
        raw=raw,
        shaped=shaped,
        accuracy=accuracy,
        entropy_term=entropy_term,
        total=total,
        flags=tuple(flags),
    )
