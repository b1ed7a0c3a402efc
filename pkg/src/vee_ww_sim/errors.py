"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for failures of the physics engine, as opposed to bad input."""


class OrthogonalPrePost(SimulationError):
    """Pre- and post-selection states are orthogonal within the overlap floor.

    Raised by weak-value evaluation when |<f|i>| is at or below the floor.
    This marks the amplification singularity, not a numerical fault; small
    but nonzero overlaps remain legal inputs.
    """


class UnphysicalRegion(SimulationError):
    """The effective decay rate is non-positive.

    In this regime scattering from the prepared state into the chosen final
    state does not occur, so scalar quantities built on the decay law are
    undefined. Curve-style operations flag rows instead of raising.
    """


class StepSizeTooLarge(SimulationError):
    """Integrator step cannot resolve the fastest bath detuning."""


class NonFiniteAmplitude(SimulationError):
    """An amplitude left the finite range during integration."""


class EnvelopeViolation(SimulationError):
    """Target density exceeded its rejection envelope (internal consistency guard)."""


class InsufficientSamples(ValueError):
    """Monte Carlo estimators require at least 100 samples."""


class ConfigError(ValueError):
    """Invalid or contradictory run configuration."""
