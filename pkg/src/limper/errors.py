"""Exception types shared across the package."""


class LimperError(Exception):
    """Base class for all package errors."""


class PeriodTooLargeError(LimperError):
    """Periodic eigensolver path requested beyond its period cap."""


class NotInSpectrumError(LimperError):
    """Bloch solution requested at an energy with |tr| > 2."""


class EllipticEnergyError(LimperError):
    """Hyperbolic splitting requested at an energy with |tr| <= 2."""


class EmptyFamilyError(LimperError):
    """An interval family operation needs at least one interval."""


class NoBandFoundError(LimperError):
    """A band search in a shifted window found no certifiable band.

    Carries a diagnostics dict describing what the search saw (window,
    grid resolution, slivers with discriminant magnitudes).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegenerateSplittingError(LimperError):
    """Both Cayley-Hamilton coefficients numerically vanish."""


class ConstructionError(LimperError):
    """A construction stage failed certification; diagnostics attached."""

    def __init__(self, message, stage=None, diagnostics=None):
        super().__init__(message)
        self.stage = stage
        self.diagnostics = diagnostics or {}


class DensityError(ConstructionError):
    """A built interval family missed its density target."""
