import numpy as np
import pytest

from iireward import (
    ROLE_OUTPUT,
    ROLE_PROMPT,
    EmbeddingRecord,
    EmbeddingRecordSet,
    TransitionProbabilityMatrix,
)


def tpm_from_probs(probs: np.ndarray, n_units: int) -> TransitionProbabilityMatrix:
    size = 2**n_units
    probs = np.asarray(probs, dtype=float)
    assert probs.shape == (size, size)
    counts = np.zeros((size, size), dtype=np.int64)
    return TransitionProbabilityMatrix(
        n_units=n_units, probs=probs, counts=counts, observed_rows=(1 << size) - 1
    )


def permutation_tpm(perm: list[int], n_units: int) -> TransitionProbabilityMatrix:
    size = 2**n_units
    probs = np.zeros((size, size))
    for s, e in enumerate(perm):
        probs[s, e] = 1.0
    return tpm_from_probs(probs, n_units)


def uniform_tpm(n_units: int) -> TransitionProbabilityMatrix:
    size = 2**n_units
    return tpm_from_probs(np.full((size, size), 1.0 / size), n_units)


def copy_system_tpm() -> TransitionProbabilityMatrix:
    # two units copying each other: next = (B, A); deterministic swap
    probs = np.zeros((4, 4))
    for s in range(4):
        a, b = s & 1, s >> 1 & 1
        probs[s, (a << 1) | b] = 1.0
    return tpm_from_probs(probs, 2)


def make_records(
    groups: dict[str, dict[str, np.ndarray]],
    prompts: dict[str, np.ndarray],
) -> EmbeddingRecordSet:
    """groups: prompt_id -> {trajectory_id -> output matrix}."""
    records = []
    for prompt_id, matrix in prompts.items():
        for i, vec in enumerate(np.atleast_2d(matrix)):
            records.append(EmbeddingRecord(prompt_id, "", ROLE_PROMPT, i, np.asarray(vec, float)))
    for prompt_id, trajectories in groups.items():
        for trajectory_id, matrix in trajectories.items():
            for i, vec in enumerate(np.atleast_2d(matrix)):
                records.append(
                    EmbeddingRecord(prompt_id, trajectory_id, ROLE_OUTPUT, i, np.asarray(vec, float))
                )
    return EmbeddingRecordSet(records)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
