"""Exception hierarchy shared by all modules."""


class ZenoError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ZenoError, ValueError):
    """A physical parameter violates its constraint."""


class QuadratureError(ZenoError):
    """Adaptive quadrature failed to reach the requested tolerance.

    ``achieved`` carries the error estimate that was reached.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


class UnitarityError(ZenoError):
    """s + eps + r departed from one beyond tolerance; signals a numerical bug."""


class NormDriftError(ZenoError):
    """The oracle integration lost norm; the time step is too large."""
