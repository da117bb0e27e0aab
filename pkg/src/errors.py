"""
Exception hierarchy for FeedbackGain.

Library code raises these; the CLI maps them to a non-zero exit code.
"""


class FeedbackGainError(Exception):
    """Base class for all FeedbackGain errors."""


class ParameterError(FeedbackGainError, ValueError):
    """Invalid scalar parameters or sizes (e.g. dimension too small, tau0 > 1)."""


class ContractViolation(FeedbackGainError):
    """An input broke an operation's precondition (shape mismatch, non-equidistant code)."""


class InsufficientDataError(FeedbackGainError):
    """Not enough usable rows to fit a statistic."""


class InfeasibleGridError(FeedbackGainError):
    """No optimizer grid point satisfies the validity constraint."""
