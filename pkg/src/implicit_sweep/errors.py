"""Exception hierarchy shared by the solver modules."""


class SweepError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SweepError, ValueError):
    """Rejected input: wrong dimensions, violated preconditions, bad config."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class FactorizationError(SweepError):
    """Cholesky factorization failed (operator not coercive)."""


class UnboundedSupportError(SweepError):
    """Support function is +inf in the requested direction."""


class ConvergenceError(SweepError):
    """An iterative method hit its iteration cap."""

    def __init__(self, message, residual, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class InconsistencyError(SweepError):
    """A converged iterate failed its optimality certificate."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
