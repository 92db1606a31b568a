"""Exception hierarchy shared by every module."""


class HeunBetaError(Exception):
    """Base class for all package errors."""


class DomainError(HeunBetaError, ValueError):
    """Argument outside the region where a quantity is defined."""


class ConvergenceError(HeunBetaError, ArithmeticError):
    """An iterative procedure hit its iteration cap."""


class StepSizeError(HeunBetaError, ArithmeticError):
    """Adaptive integrator step underflowed."""


class ConstraintViolation(HeunBetaError, ValueError):
    """Parameters do not satisfy the constraint of the requested family."""


class PivotBreakdown(HeunBetaError, ZeroDivisionError):
    """Leading recurrence coefficient vanished."""


class UnsupportedFamily(HeunBetaError, ValueError):
    """Operation is not defined for the requested family."""


class NotTerminating(HeunBetaError, ValueError):
    """Termination conditions are not met."""


class StepBreakdown(HeunBetaError, ZeroDivisionError):
    """Upward Beta recurrence divides by zero."""
