"""End-to-end scoring: embedding records -> scopes -> states -> TPM -> rewards.

One PCA basis and one TPM per scope, so every trajectory in a scope is
measured in the same coordinate system. Degenerate scopes (too few rows,
zero variance, no transitions) either propagate as numeric errors or, when
requested, collapse to zero-reward breakdowns so a batch run survives a few
bad groups.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, RewardFlagWarning
from .records import EmbeddingRecordSet
from .reward import (
    FLAG_DEGENERATE_SCOPE,
    KIND_ENTROPY_MIN,
    RewardBreakdown,
    RewardConfig,
    trajectory_reward,
)
from .state_space import (
    CONDITION_ATTENTION,
    BinaryStateSequence,
    ReductionConfig,
    reduce_and_binarize,
    condition_output_on_prompt,
)
from .tpm import Scope, TpmPolicy, TransitionProbabilityMatrix, build_tpm, group_by_policy

ON_DEGENERATE_RAISE = "raise"
ON_DEGENERATE_ZERO = "zero"


@dataclass
class ScopeOutcome:
    """Everything computed for one TPM scope, in input trajectory order."""

    scope_id: str
    tpm: TransitionProbabilityMatrix | None
    sequences: dict[str, BinaryStateSequence] = field(default_factory=dict)
    breakdowns: list[RewardBreakdown] = field(default_factory=list)
    failure: str | None = None


def conditioned_outputs(
    records: EmbeddingRecordSet, scope: Scope, reduction: ReductionConfig
) -> dict[str, np.ndarray]:
    """Per-trajectory output vectors, attention-conditioned on their prompt
    when the config asks for it."""
    out: dict[str, np.ndarray] = {}
    for prompt_id, trajectory_id in scope.trajectories:
        vectors = records.output_vectors(trajectory_id)
        if reduction.conditioning == CONDITION_ATTENTION:
            vectors = condition_output_on_prompt(records.prompt_vectors(prompt_id), vectors)
        out[trajectory_id] = vectors
    return out


def scope_sequences(
    records: EmbeddingRecordSet, scope: Scope, reduction: ReductionConfig
) -> dict[str, BinaryStateSequence]:
    """Binarize every trajectory in the scope against the scope-wide PCA fit."""
    conditioned = conditioned_outputs(records, scope, reduction)
    fit_scope = np.vstack(list(conditioned.values()))
    return {
        trajectory_id: reduce_and_binarize(vectors, reduction, fit_scope, trajectory_id)
        for trajectory_id, vectors in conditioned.items()
    }


def score_scope(
    records: EmbeddingRecordSet,
    scope: Scope,
    reduction: ReductionConfig,
    reward_config: RewardConfig,
    accuracy_labels: dict[str, int] | None = None,
    on_degenerate: str = ON_DEGENERATE_RAISE,
) -> ScopeOutcome:
    labels = accuracy_labels or {}
    try:
        sequences = scope_sequences(records, scope, reduction)
        tpm = build_tpm(list(sequences.values()), reduction.n_units)
    except NumericError as exc:
        if on_degenerate == ON_DEGENERATE_RAISE:
            raise
        warnings.warn(
            f"scope {scope.scope_id}: {exc}; rewards forced to zero",
            RewardFlagWarning,
            stacklevel=2,
        )
        breakdowns = [
            RewardBreakdown(
                trajectory_id=trajectory_id,
                kind=reward_config.kind,
                raw=0.0,
                shaped=0.0,
                accuracy=float(labels.get(trajectory_id, 0)),
                entropy_term=0.0,
                total=0.0,
                flags=(FLAG_DEGENERATE_SCOPE,),
            )
            for _, trajectory_id in scope.trajectories
        ]
        return ScopeOutcome(scope.scope_id, None, {}, breakdowns, failure=str(exc))

    breakdowns = [
        trajectory_reward(
            tpm,
            sequences[trajectory_id].states,
            reward_config,
            accuracy=float(labels.get(trajectory_id, 0)),
            trajectory_id=trajectory_id,
        )
        for _, trajectory_id in scope.trajectories
    ]
    return ScopeOutcome(scope.scope_id, tpm, sequences, breakdowns)


def compute_rewards(
    records: EmbeddingRecordSet,
    reduction: ReductionConfig,
    policy: TpmPolicy,
    reward_config: RewardConfig,
    accuracy_labels: dict[str, int] | None = None,
    on_degenerate: str = ON_DEGENERATE_RAISE,
) -> list[ScopeOutcome]:
    """Score every trajectory in the record set, one outcome per TPM scope."""
    if on_degenerate not in (ON_DEGENERATE_RAISE, ON_DEGENERATE_ZERO):
        raise ConfigError(f"unknown degenerate-scope policy {on_degenerate!r}")
    if reward_config.kind == KIND_ENTROPY_MIN:
        raise ConfigError(
            "entropy_min rewards need sampling distributions; embedding records carry none"
        )
    return [
        score_scope(records, scope, reduction, reward_config, accuracy_labels, on_degenerate)
        for scope in group_by_policy(records, policy)
    ]


def flatten_breakdowns(outcomes: list[ScopeOutcome]) -> list[RewardBreakdown]:
    return [breakdown for outcome in outcomes for breakdown in outcome.breakdowns]
