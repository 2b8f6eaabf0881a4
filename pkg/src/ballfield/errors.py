"""Exception types shared across the package."""


class BallFieldError(Exception):
    """Base class for all errors raised by ballfield."""


class DomainError(BallFieldError, ValueError):
    """Invalid argument: bad radius, dimension mismatch, malformed input."""


class PreconditionError(BallFieldError, ValueError):
    """An operation precondition does not hold for the supplied data.

    ``index`` names the offending element (e.g. the ball that is not in the
    positive half-space) when there is one.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalError(BallFieldError, ArithmeticError):
    """A numerical procedure failed (quadrature, factorization).

    ``estimate`` carries the achieved error estimate or the offending leading
    minor, depending on the raising routine.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class UnsupportedError(BallFieldError, NotImplementedError):
    """The region algebra cannot decide the requested query."""
