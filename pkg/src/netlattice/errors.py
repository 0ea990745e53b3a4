"""Exception types raised across the package.

Every error is a subclass of NetLatticeError so callers can catch the whole
family with one clause. Errors that point at a specific input carry enough
context (field name, layer index, ...) to make the failure actionable.
"""

from __future__ import annotations


class NetLatticeError(Exception):
    """Base class for all errors raised by netlattice."""


class ConfigError(NetLatticeError):
    """An ensemble configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonPositiveBiasVariance(ConfigError):
    def __init__(self, value: float):
        super().__init__("bias_variance", f"must be > 0, got {value!r}")


class WindowOutOfRange(ConfigError):
    def __init__(self, message: str):
        super().__init__("window_start/window_len", message)


class WindowNotPowerOfTwo(ConfigError):
    def __init__(self, value: int):
        super().__init__("window_len", f"must be a power of two, got {value!r}")


class InvalidField(ConfigError):
    """Catch-all for other per-field validation failures."""


class Supercritical(NetLatticeError):
    """Requested a closed-form result outside its domain of validity."""

    def __init__(self, weight_variance: float, limit: float):
        self.weight_variance = weight_variance
        self.limit = limit
        super().__init__(
            f"weight_variance={weight_variance!r} is outside the subcritical "
            f"domain (requires < {limit!r})"
        )


class ZeroMode(NetLatticeError):
    """The q = 0 mode has no finite predicted variance on the ring."""


class NoConvergence(NetLatticeError):
    """Fixed-point iteration failed to reach tolerance within the budget."""


class NumericOverflow(NetLatticeError):
    """A forward pass produced non-finite values.

    layer is the first layer index at which the overflow was detected.
    """

    def __init__(self, layer: int):
        self.layer = layer
        super().__init__(f"non-finite activations first detected at layer {layer}")


class TooFewSamples(NetLatticeError):
    """An estimator was given fewer samples than it can support."""


class MissingReference(NetLatticeError):
    """Fluctuations were requested but no reference profile is available."""


class BadLength(NetLatticeError):
    """A series had a length the transform convention does not accept."""


class FieldMisalignment(NetLatticeError):
    """Mode arrays for jointly analysed fields do not line up."""


class InsufficientModes(NetLatticeError):
    """Too few modes inside the fit range to constrain the fit."""


class NonPositiveFit(NetLatticeError):
    """A fit returned coefficients outside the physically meaningful region."""


class DomainViolation(NetLatticeError):
    """A lattice state left the domain where its energy is defined."""


class NonFiniteEnergy(NetLatticeError):
    """A lattice energy evaluated to NaN or infinity."""


class SeriesTooShort(NetLatticeError):
    """A time series is too short for a reliable autocorrelation estimate."""


class EmptySeries(NetLatticeError):
    """A plot was requested with no data points."""


class GridMismatch(NetLatticeError):
    """Measured and predicted tables do not share a common grid."""


class UnknownKind(NetLatticeError):
    """An experiment plan named a kind this package does not provide."""
