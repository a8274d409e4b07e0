"""Exception and warning types shared across the package.

Exit-code mapping used by the CLI:
  2 -- input cannot be parsed or violates data invariants
  3 -- configuration is invalid (bad flag combos, dimensionality limits)
  4 -- numeric/data degeneracy at runtime (too few rows, zero variance, ...)
"""


class IIRewardError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(IIRewardError):
    """Input data violates a precondition (shape mismatch, bad range, ...)."""

    exit_code = 2


class ConfigError(IIRewardError):
    """Configuration value is out of its allowed domain."""

    exit_code = 3


class DimensionalityLimitError(ConfigError):
    """Requested unit count exceeds what phi computation supports (n > 3)."""


class NumericError(IIRewardError):
    """Data-dependent degeneracy detected during computation."""

    exit_code = 4


class InsufficientDataError(NumericError):
    """Too few rows to fit the requested reduction."""


class DegenerateReductionError(NumericError):
    """Fit scope has no variance along the requested number of components."""


class EmptyTransitionsError(NumericError):
    """No state sequence contributes a single transition."""


class ConditioningWarning(UserWarning):
    """Attention conditioning was skipped (e.g. empty prompt)."""


class RewardFlagWarning(UserWarning):
    """A reward was clamped or zeroed for a degenerate input."""
