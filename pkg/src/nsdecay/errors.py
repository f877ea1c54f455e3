"""Error taxonomy shared across the package.

Physics-regime violations (vacuum, nonpositive temperature) and numerical
guard failures (CFL, quadrature) get named exception types so that runs can
abort with a labeled record instead of clamping or silently continuing.
"""


class NsdecayError(Exception):
    """Base class for all package-specific errors."""


class RepresentationMismatch(NsdecayError):
    """A field was supplied in the wrong representation (physical/spectral)."""


class ConfigError(NsdecayError):
    """A config file or artifact schema could not be parsed or validated."""


class NegativePowerOnNonzeroMean(NsdecayError):
    """Lambda^s with s < 0 requested for a field whose mean is not zero."""


class DensityNonpositive(NsdecayError):
    """min(1 + a) <= 0 somewhere: the no-vacuum regime has been left."""

    def __init__(self, min_density: float, t: float | None = None):
        self.min_density = min_density
        self.t = t
        where = "" if t is None else f" at t={t:g}"
        super().__init__(f"density 1+a reached {min_density:g}{where}; run is outside the no-vacuum regime")


class TemperatureNonpositive(NsdecayError):
    """min(1 + theta) <= 0 somewhere."""

    def __init__(self, min_temperature: float, t: float | None = None):
        self.min_temperature = min_temperature
        self.t = t
        where = "" if t is None else f" at t={t:g}"
        super().__init__(f"temperature 1+theta reached {min_temperature:g}{where}")


class CflViolation(NsdecayError):
    """Fixed dt exceeded the advective CFL bound 0.5*dx/max|u|."""

    def __init__(self, dt: float, bound: float, t: float):
        self.dt = dt
        self.bound = bound
        self.t = t
        super().__init__(f"dt={dt:g} exceeds advective CFL bound {bound:g} at t={t:g}")


class PositivityUnachievable(NsdecayError):
    """Initial data violates min(1+a) > 0.5 (or theta analogue) at t=0."""

    def __init__(self, component: str, amplitude: float, max_admissible: float):
        self.component = component
        self.amplitude = amplitude
        self.max_admissible = max_admissible
        super().__init__(
            f"initial {component} amplitude {amplitude:g} violates the positivity margin; "
            f"max admissible amplitude is approximately {max_admissible:.6g}"
        )


class RunAborted(NsdecayError):
    """A run terminated early; carries the cause and any partial outputs."""

    def __init__(self, reason: str, t: float, cause: Exception | None = None, artifacts=None):
        self.reason = reason
        self.t = t
        self.cause = cause
        self.artifacts = artifacts
        super().__init__(f"run aborted at t={t:g}: {reason}")


class QuadratureError(NsdecayError):
    """Adaptive quadrature failed to reach the requested relative tolerance."""
