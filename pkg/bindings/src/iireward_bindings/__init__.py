"""Array-in, rewards-out sessions over the iireward pipeline.

A RewardSession freezes a reduction + TPM policy + reward configuration at
creation and then scores groups of responses handed over as in-memory 2-d
arrays, with no file round-trip. Numeric results are identical to the
primary command line on the same data; errors are the primary's exception
types, so exit-code mapping (2 input, 3 config, 4 numeric) carries over.

Concurrent `reward` calls on one session are safe: the session holds only
immutable configuration and every call builds its own record set.
"""

from __future__ import annotations

import numpy as np

from iireward import (
    ConfigError,
    EmbeddingRecord,
    EmbeddingRecordSet,
    IIRewardError,
    InvalidInputError,
    NumericError,
    ReductionConfig,
    RewardBreakdown,
    RewardConfig,
    TpmPolicy,
    compute_rewards,
    flatten_breakdowns,
)

__all__ = [
    "RewardSession",
    "exit_code_for",
    "IIRewardError",
    "InvalidInputError",
    "ConfigError",
    "NumericError",
]

__version__ = "0.1.0"


def exit_code_for(exc: BaseException) -> int:
    """CLI exit code the primary would report for this exception."""
    if isinstance(exc, IIRewardError):
        return exc.exit_code
    return 1


def _as_matrix(name: str, value) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
        raise InvalidInputError(
            f"{name} must be a nonempty 2-d array of token vectors, got shape {array.shape}"
        )
    return array


class RewardSession:
    """Configured scoring pipeline; configuration is frozen at creation."""

    def __init__(
        self,
        reduction: ReductionConfig | None = None,
        policy: TpmPolicy | None = None,
        reward: RewardConfig | None = None,
        on_degenerate: str = "raise",
    ):
        self._reduction = reduction if reduction is not None else ReductionConfig(n_units=2)
        self._policy = policy if policy is not None else TpmPolicy(mode="trajectory")
        self._reward = reward if reward is not None else RewardConfig(kind="ii")
        if self._reward.kind == "entropy_min":
            raise ConfigError(
                "entropy_min rewards need sampling distributions; embedding arrays carry none"
            )
        if on_degenerate not in ("raise", "zero"):
            raise ConfigError(f"unknown degenerate-scope policy {on_degenerate!r}")
        self._on_degenerate = on_degenerate

    @property
    def reduction(self) -> ReductionConfig:
        return self._reduction

    @property
    def policy(self) -> TpmPolicy:
        return self._policy

    @property
    def reward_config(self) -> RewardConfig:
        return self._reward

    def reward(
        self,
        prompt_embeddings,
        output_embeddings_group,
        accuracies: list[int] | None = None,
    ) -> list[RewardBreakdown]:
        """Score one prompt's response group; one breakdown per response.

        prompt_embeddings: (tokens, dim) array for the shared prompt.
        output_embeddings_group: sequence of (tokens_i, dim) arrays.
        accuracies: optional 0/1 judgments aligned with the group.
        """
        group = list(output_embeddings_group)
        if len(group) == 0:
            return []
        prompt = _as_matrix("prompt_embeddings", prompt_embeddings)
        outputs = [_as_matrix(f"output_embeddings_group[{i}]", m) for i, m in enumerate(group)]
        for i, matrix in enumerate(outputs):
            if matrix.shape[1] != prompt.shape[1]:
                raise InvalidInputError(
                    f"output_embeddings_group[{i}] has dim {matrix.shape[1]}, "
                    f"prompt has dim {prompt.shape[1]}"
                )
        if accuracies is not None and len(accuracies) != len(outputs):
            raise InvalidInputError(
                f"got {len(accuracies)} accuracy labels for {len(outputs)} responses"
            )

        records = []
        for index, vector in enumerate(prompt):
            records.append(EmbeddingRecord("p0", "", "prompt", index, vector))
        width = len(str(len(outputs) - 1))
        trajectory_ids = [f"p0/t{i:0{width}d}" for i in range(len(outputs))]
        for tid, matrix in zip(trajectory_ids, outputs):
            for index, vector in enumerate(matrix):
                records.append(EmbeddingRecord("p0", tid, "output", index, vector))
        labels = (
            {tid: int(a) for tid, a in zip(trajectory_ids, accuracies)}
            if accuracies is not None
            else None
        )
        outcomes = compute_rewards(
            EmbeddingRecordSet(records),
            self._reduction,
            self._policy,
            self._reward,
            accuracy_labels=labels,
            on_degenerate=self._on_degenerate,
        )
        by_id = {b.trajectory_id: b for b in flatten_breakdowns(outcomes)}
        return [by_id[tid] for tid in trajectory_ids]
