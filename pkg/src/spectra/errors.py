"""Exception hierarchy shared by all modules."""


class SpectraError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(SpectraError, ValueError):
    """A parameter lies outside its admissible range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(SpectraError, ValueError):
    """Frequency domains of the inputs do not match."""


class OutOfRangeError(SpectraError, ValueError):
    """A tabulated function was queried outside its grid."""


class InfiniteMassError(SpectraError, ValueError):
    """An operation that needs a finite spectral measure got an infinite one."""


class UnsupportedError(SpectraError, ValueError):
    """The requested model or measure is not handled by this operation."""


class SizingError(SpectraError, ValueError):
    """Sample sizes, grids or windows are too small for the request."""


class NumericalError(SpectraError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy value."""


class QuadratureEvaluationError(NumericalError):
    """The integrand returned NaN."""

    def __init__(self, location):
        self.location = location
        super().__init__(f"integrand returned NaN at u={location!r}")


class DivergenceError(NumericalError):
    """An integral required to be finite was found to diverge."""


class ConditioningError(NumericalError):
    """A linear system is too ill-conditioned to solve reliably."""
