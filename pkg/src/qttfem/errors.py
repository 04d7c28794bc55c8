"""Exception types raised across the package."""


class QTTError(Exception):
    """Base class for all package errors."""


class ShapeError(QTTError, ValueError):
    """Operands have incompatible mode sizes or shapes."""


class GuardError(QTTError):
    """A dense materialization would exceed the configured size guard."""


class SingularityError(QTTError, ArithmeticError):
    """A value that must be inverted is (numerically) zero."""


class DegenerateElementError(SingularityError):
    """A quadrangle or one of its mesh elements has a non-positive Jacobian."""


class ConvergenceError(QTTError):
    """An iterative solver ran out of sweeps before meeting its tolerance.

    The best iterate found is kept on ``best`` so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(QTTError, ValueError):
    """A domain configuration or experiment plan is invalid."""
