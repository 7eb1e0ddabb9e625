"""Exception types shared across the package."""


class DualpolError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(DualpolError, ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigurationError(DualpolError, ValueError):
    """A scenario or preset violates a dimensional constraint."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but numerically degenerate (e.g. all-zero)."""


class NumericalError(DualpolError, RuntimeError):
    """A numerical routine failed to reach its accuracy target.

    The ``residual`` attribute carries the last error estimate when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap before meeting tolerance."""


class InfeasibleRegionError(DualpolError):
    """An elevation region has no interference-free direction left."""
