"""Exception hierarchy shared by every module."""


class HypackError(Exception):
    """Base class for all errors raised by hypack."""


class InvalidInputError(HypackError, ValueError):
    """An argument violates a documented precondition."""


class NumericalAccuracyError(HypackError, ArithmeticError):
    """A numerical procedure could not reach its tolerance.

    ``residual`` carries the observed discrepancy when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ContractViolationError(HypackError):
    """An operation was called on an object in the wrong state."""


class ResourceLimitError(HypackError):
    """A configured size cap would be exceeded."""


class OptimizationFailedError(HypackError):
    """The certificate search could not produce a verified certificate."""

    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins
