"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/parameter problems -> 1,
data problems -> 2, numerical failures -> 3.
"""


class LatentLinkError(Exception):
    """Base class for all package errors."""


class ParameterError(LatentLinkError, ValueError):
    """A parameter is outside its admissible domain."""


class UsageError(LatentLinkError, ValueError):
    """An operation was called in a way its contract forbids."""


class DataError(LatentLinkError):
    """Input data is malformed or inconsistent."""


class ParseError(DataError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class CapacityError(DataError):
    """A split or sample request exceeds what the data can provide."""


class NumericalError(LatentLinkError):
    """A numerical routine failed (non-finite values, failed factorization)."""


class SingularPrecisionError(NumericalError):
    """A precision matrix was not symmetric positive definite."""


class CheckpointError(DataError):
    """A checkpoint file is unreadable or has an incompatible version."""
