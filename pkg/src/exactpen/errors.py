"""Exception types shared across the package."""


class ExactPenError(Exception):
    """Base class for all package errors."""


class InvalidParameter(ExactPenError, ValueError):
    pass


class ValidationFailure(ExactPenError):
    """A constructed generator function violates the family requirements."""


class DomainError(ExactPenError, ValueError):
    pass


class DimensionMismatch(ExactPenError, ValueError):
    pass


class Infeasible(ExactPenError):
    pass


class SvdFailure(ExactPenError):
    pass


class MaxIterReached(RuntimeWarning):
    """Emitted (as a warning) when an iterative solver hits its iteration cap.

    The solver still returns its best iterate; the report carries a flag.
    """
