"""Exception hierarchy shared by all modules."""


class BesselHeatError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BesselHeatError, ValueError):
    """An argument lies outside the documented domain."""


class RegimeError(DomainError):
    """An estimate envelope was evaluated outside its regime."""


class BesselOverflowError(BesselHeatError, OverflowError):
    """The unscaled function value does not fit in a double.

    Use the ``*_scaled`` variant instead.
    """


class InversionError(BesselHeatError, ArithmeticError):
    """Numerical Laplace inversion did not converge.

    Attributes
    ----------
    values : tuple of float
        The two disagreeing estimates (coarse, fine), as log-values.
    """

    def __init__(self, message, values=(float("nan"), float("nan"))):
        super().__init__(message)
        self.values = tuple(values)


class CancellationError(BesselHeatError, ArithmeticError):
    """A killed-kernel value could not be resolved to a point estimate.

    ``interval`` holds a guaranteed enclosure ``(lo, hi)``.
    """

    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = tuple(interval)


class QuadratureError(BesselHeatError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ReportError(BesselHeatError):
    """A sweep produced no usable points."""


class BaselineMissingError(BesselHeatError, FileNotFoundError):
    """The frozen-bracket baseline file does not exist."""
