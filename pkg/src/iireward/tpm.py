"""Transition probability matrices over n-bit substrate states.

Counts come from adjacent state pairs within each trajectory (never across
trajectory boundaries). Observed rows are normalized raw frequencies; rows of
never-visited states fall back to the uniform distribution so the matrix is
fully defined (a uniform row contributes zero intrinsic information, hence no
spurious reward).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyTransitionsError, InvalidInputError
from .records import EmbeddingRecordSet
from .state_space import BinaryStateSequence

MODE_BATCH = "batch"
MODE_PROMPT = "prompt"
MODE_TRAJECTORY = "trajectory"

_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class TpmPolicy:
    """Which trajectories pool their transitions into one matrix."""

    mode: str

    def __post_init__(self):
        if self.mode not in (MODE_BATCH, MODE_PROMPT, MODE_TRAJECTORY):
            raise ConfigError(f"unknown TPM policy mode {self.mode!r}")


@dataclass(frozen=True)
class Scope:
    """One TPM-construction scope: its id and member trajectories."""

    scope_id: str
    trajectories: tuple[tuple[str, str], ...]  # (prompt_id, trajectory_id)


@dataclass
class TransitionProbabilityMatrix:
    n_units: int
    probs: np.ndarray
    counts: np.ndarray
    observed_rows: int  # bitmask, bit s set iff row s has >= 1 observation

    @property
    def n_states(self) -> int:
        return 1 << self.n_units

    @classmethod
    def from_counts(cls, counts: np.ndarray, n_units: int) -> "TransitionProbabilityMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        size = 1 << n_units
        if counts.shape != (size, size):
            raise InvalidInputError(
                f"counts must be {size}x{size} for n_units={n_units}, got {counts.shape}"
            )
        if np.any(counts < 0):
            raise InvalidInputError("negative transition counts")
        row_sums = counts.sum(axis=1)
        probs = np.full((size, size), 1.0 / size)
        observed = 0
        for s in range(size):
            if row_sums[s] > 0:
                probs[s] = counts[s] / row_sums[s]
                observed |= 1 << s
        return cls(n_units=n_units, probs=probs, counts=counts, observed_rows=observed)

    def row_observed(self, s: int) -> bool:
        return bool((self.observed_rows >> s) & 1)


def build_tpm(
    sequences: list[BinaryStateSequence], n_units: int
) -> TransitionProbabilityMatrix:
    """Tally adjacent-pair transitions across sequences and normalize rows."""
    if not sequences:
        raise InvalidInputError("no sequences given")
    for seq in sequences:
        if seq.n_units != n_units:
            raise InvalidInputError(
                f"sequence {seq.trajectory_id!r} has n_units={seq.n_units}, expected {n_units}"
            )
    if not any(len(seq) >= 2 for seq in sequences):
        raise EmptyTransitionsError("no sequence contributes a transition (all len < 2)")
    size = 1 << n_units
    counts = np.zeros((size, size), dtype=np.int64)
    for seq in sequences:
        states = seq.states
        for a, b in zip(states[:-1], states[1:]):
            counts[a, b] += 1
    return TransitionProbabilityMatrix.from_counts(counts, n_units)


def group_by_policy(records: EmbeddingRecordSet, policy: TpmPolicy) -> list[Scope]:
    """Partition a record set's trajectories into TPM-construction scopes.

    Scope ids are "batch", the prompt_id, or the trajectory_id depending on
    the mode; scopes are ordered by first appearance in the record set.
    """
    trajectories = records.trajectories()
    if policy.mode == MODE_BATCH:
        return [Scope("batch", tuple(trajectories))]
    if policy.mode == MODE_PROMPT:
        by_prompt: dict[str, list[tuple[str, str]]] = {}
        for pid, tid in trajectories:
            by_prompt.setdefault(pid, []).append((pid, tid))
        return [Scope(pid, tuple(members)) for pid, members in by_prompt.items()]
    return [Scope(tid, ((pid, tid),)) for pid, tid in trajectories]


def save_tpm(tpm: TransitionProbabilityMatrix, path: str | Path) -> None:
    """Persist as JSON; counts round-trip exactly, probs via shortest repr."""
    payload = {
        "n_units": tpm.n_units,
        "counts": [[int(c) for c in row] for row in tpm.counts],
        "probs": [[float(p) for p in row] for row in tpm.probs],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def load_tpm(path: str | Path) -> TransitionProbabilityMatrix:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"{path}: no such file")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        n_units = int(payload["n_units"])
        counts = np.asarray(payload["counts"], dtype=np.int64)
        probs = np.asarray(payload["probs"], dtype=float)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"{path}: bad TPM file ({exc})") from exc
    size = 1 << n_units
    if probs.shape != (size, size) or counts.shape != (size, size):
        raise InvalidInputError(f"{path}: matrix shape does not match n_units={n_units}")
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > _ROW_SUM_TOL):
        raise InvalidInputError(f"{path}: rows do not sum to 1")
    rebuilt = TransitionProbabilityMatrix.from_counts(counts, n_units)
    # Stored probs win over recomputation so hand-edited matrices stay usable.
    return TransitionProbabilityMatrix(
        n_units=n_units, probs=probs, counts=counts, observed_rows=rebuilt.observed_rows
    )
