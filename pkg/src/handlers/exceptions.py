"""Exception hierarchy shared by the services and the command line."""


class SlmError(Exception):
    """Base class for every error raised by the package."""


class ValidationFailedError(SlmError, ValueError):
    """Inputs, shapes or configuration violate a documented precondition."""


class NumericalFailureError(SlmError, ArithmeticError):
    """A computation produced nonfinite values or hit a degenerate case."""
