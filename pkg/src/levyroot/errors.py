"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its admissible set."""


class DomainError(ValueError):
    """A point lies outside the domain of the function being evaluated."""


class ResolutionError(ValueError):
    """A request needs finer sampling than the path provides."""


class TruncationError(ValueError):
    """A truncated series cannot reach the requested accuracy."""

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class NonConvergenceError(RuntimeError):
    """A limit estimate failed its convergence gate."""


class UnsupportedMethodError(NotImplementedError):
    """The requested evaluation route is not available for this input."""
