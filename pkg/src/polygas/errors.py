"""Semantic exception hierarchy shared by all modules."""


class PolygasError(Exception):
    """Base class for every error raised by this package."""


class UniverseError(PolygasError, ValueError):
    """Malformed universe input: duplicate ids, unknown ids, bad supports."""


class NormalizationFailure(PolygasError, ZeroDivisionError):
    """A ratio against a vanishing partition function was requested."""


class DivergenceIndicator(PolygasError, ArithmeticError):
    """Xi(-rho) <= 0 somewhere: the radius family lies outside the region
    where negative-activity ratios and their logarithms make sense.

    Scans are expected to catch this and record the point as outside the
    certified convergence region rather than aborting.
    """


class ResourceLimit(PolygasError, RuntimeError):
    """An enumeration would exceed the configured size cap."""


class PrecheckFailure(PolygasError, RuntimeError):
    """A weight-family precondition failed.  Carries the failing element."""

    def __init__(self, message, element=None, margin=None):
        super().__init__(message)
        self.element = element
        self.margin = margin


class ModelError(PolygasError, ValueError):
    """Model file violates the schema or is internally inconsistent."""


class NonHomogeneousModel(PolygasError, ValueError):
    """Scalar weight optimization was requested on a model whose declared
    weights are not uniform."""
