"""Embedding sequences to binary substrate states.

Three deterministic steps: condition output token vectors on the prompt with
parameter-free scaled dot-product attention, project onto the top principal
components of the construction scope, and binarize each reduced dimension at
its mean over that scope. Component j of the reduction maps to bit j of the
state integer (component 0 = largest eigenvalue = least significant bit).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConditioningWarning,
    ConfigError,
    DegenerateReductionError,
    InsufficientDataError,
    InvalidInputError,
)

STATE_TOKEN = "token"
STATE_CHUNK = "chunk"

CONDITION_ATTENTION = "attention"
CONDITION_NONE = "none"

# Eigenvalues below this fraction of the largest count as zero variance.
_VARIANCE_RTOL = 1e-10


@dataclass(frozen=True)
class ReductionConfig:
    """How token vectors become n-bit substrate states."""

    n_units: int
    state_size: str = STATE_TOKEN
    chunk_k: int | None = None
    conditioning: str = CONDITION_ATTENTION

    def __post_init__(self):
        if not 1 <= self.n_units <= 8:
            raise ConfigError(f"n_units must be in [1, 8], got {self.n_units}")
        if self.state_size not in (STATE_TOKEN, STATE_CHUNK):
            raise ConfigError(f"unknown state_size {self.state_size!r}")
        if self.state_size == STATE_CHUNK:
            if self.chunk_k is None or self.chunk_k < 2:
                raise ConfigError("chunk mode requires chunk_k >= 2")
        if self.conditioning not in (CONDITION_ATTENTION, CONDITION_NONE):
            raise ConfigError(f"unknown conditioning {self.conditioning!r}")


@dataclass
class BinaryStateSequence:
    """Ordered n-bit states for one trajectory."""

    trajectory_id: str
    states: list[int]
    n_units: int

    def __post_init__(self):
        limit = 1 << self.n_units
        for s in self.states:
            if not 0 <= s < limit:
                raise InvalidInputError(f"state {s} out of range for n={self.n_units}")

    def __len__(self) -> int:
        return len(self.states)


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def condition_output_on_prompt(
    prompt_vectors: np.ndarray, output_vectors: np.ndarray
) -> np.ndarray:
    """Refine output rows by attending over prompt rows, with a residual add.

    Query = output row, keys/values = prompt rows, scale 1/sqrt(d). No learned
    parameters, so the result is a pure function of its inputs. An empty
    prompt returns the outputs unchanged and issues a ConditioningWarning.
    """
    prompt = np.atleast_2d(np.asarray(prompt_vectors, dtype=float))
    output = np.atleast_2d(np.asarray(output_vectors, dtype=float))
    if output.shape[0] < 1 or output.size == 0:
        raise InvalidInputError("output must have at least one row")
    if prompt.shape[0] == 0 or prompt.size == 0:
        warnings.warn("empty prompt: conditioning skipped", ConditioningWarning)
        return output.copy()
    if prompt.shape[1] != output.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: prompt d={prompt.shape[1]}, output d={output.shape[1]}"
        )
    d = output.shape[1]
    scores = output @ prompt.T / math.sqrt(d)
    weights = _softmax_rows(scores)
    return output + weights @ prompt


def fix_component_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its first nonzero loading is positive.

    Removes the eigen-solver's sign ambiguity: v and -v map to the same row.
    """
    fixed = components.copy()
    for i, row in enumerate(fixed):
        nonzero = np.nonzero(np.abs(row) > 1e-12)[0]
        if nonzero.size and row[nonzero[0]] < 0:
            fixed[i] = -row
    return fixed


def principal_components(fit_scope: np.ndarray, n_units: int) -> tuple[np.ndarray, np.ndarray]:
    """Column means and top-n_units components (rows) of the fit scope.

    Components are ordered by descending eigenvalue and sign-fixed. Raises
    DegenerateReductionError when fewer than n_units directions carry
    variance.
    """
    fit = np.atleast_2d(np.asarray(fit_scope, dtype=float))
    if fit.shape[0] < n_units + 1:
        raise InsufficientDataError(
            f"need >= {n_units + 1} rows to fit {n_units} components, got {fit.shape[0]}"
        )
    mean = fit.mean(axis=0)
    centered = fit - mean
    cov = centered.T @ centered / (fit.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_units]
    top_vals = eigvals[order]
    tol = max(top_vals.max(initial=0.0), 0.0) * _VARIANCE_RTOL
    if top_vals.size < n_units or np.any(top_vals <= tol):
        raise DegenerateReductionError(
            f"fit scope carries variance along fewer than {n_units} directions"
        )
    components = fix_component_signs(eigvecs[:, order].T)
    return mean, components


def pool_chunks(vectors: np.ndarray, k: int) -> np.ndarray:
    """Mean-pool consecutive windows of k rows; the last window may be short."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    n = vectors.shape[0]
    bounds = range(0, n, k)
    return np.stack([vectors[i : i + k].mean(axis=0) for i in bounds])


def reduce_and_binarize(
    vectors: np.ndarray,
    config: ReductionConfig,
    fit_scope: np.ndarray,
    trajectory_id: str = "",
) -> BinaryStateSequence:
    """Project vectors onto scope principal components and threshold at means.

    The PCA basis and the per-dimension thresholds both come from fit_scope
    (the union of token vectors across the TPM-construction scope), so every
    trajectory in a scope is binarized in one coordinate system. Values
    strictly above the mean map to 1, ties and below to 0. In chunk mode the
    trajectory's token vectors are mean-pooled per window before projection.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    fit = np.atleast_2d(np.asarray(fit_scope, dtype=float))
    if vectors.shape[1] != fit.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: vectors d={vectors.shape[1]}, fit_scope d={fit.shape[1]}"
        )
    mean, components = principal_components(fit, config.n_units)
    thresholds = ((fit - mean) @ components.T).mean(axis=0)
    if config.state_size == STATE_CHUNK:
        vectors = pool_chunks(vectors, config.chunk_k)
    projected = (vectors - mean) @ components.T
    bits = projected > thresholds
    weights = 1 << np.arange(config.n_units)
    states = (bits @ weights).astype(int).tolist()
    return BinaryStateSequence(trajectory_id, states, config.n_units)
