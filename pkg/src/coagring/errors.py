"""Exception types shared across the package."""


class CoagRingError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CoagRingError, ValueError):
    """A configuration value violates its documented range."""


class EmptySpectrum(CoagRingError):
    """Operation requires a spectrum with at least one occupied size."""


class StepOnAbsorbing(CoagRingError):
    """step() was called on a state with no possible future meeting."""


class NumericalError(CoagRingError):
    """Base class for failures of the numerical routines (CLI exit code 3)."""


class NegativeDensity(NumericalError):
    """Kinetic integration produced a density below the -1e-12 floor."""


class UnsupportedSize(CoagRingError, ValueError):
    """Initial spectrum has support beyond the solver truncation."""


class ZeroConstantTerm(NumericalError):
    """Series reciprocal requested for a series with (near-)zero constant term."""


class AsymmetricCounts(CoagRingError, ValueError):
    """Closed-form solution requires equal initial cluster counts per direction."""


class NoRealRoot(NumericalError):
    """Resonance equation has no real root on the search interval."""


class ContourThroughZero(NumericalError):
    """Winding-number contour passed within 1e-12 of a zero of the function."""


class Diverged(NumericalError):
    """Trajectory exceeded the divergence bound.

    Attributes
    ----------
    tau : complex
        Point along the integration path at which the bound was exceeded.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class QuadratureNotConverged(NumericalError):
    """Doubling the quadrature contour still changed output beyond tolerance."""


class DegenerateHistogram(CoagRingError):
    """Histogram has too few occupied bins for a meaningful fit."""
