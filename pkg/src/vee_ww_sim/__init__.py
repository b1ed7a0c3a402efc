"""Post-selected spontaneous decay of a V-type atom.

The package has two independent routes to the same physics. `markov` carries
the closed-form post-selected decay law and the mean-scattering-time curves;
`bath` re-derives the decay by integrating a discretized radiation field from
first principles, so the Markov reduction can be checked rather than assumed.
`qstate` supplies the two-level pre/post-selection algebra and weak values,
`trajectory` the reproducible Monte Carlo arrival-time statistics, and `cli`
a command-line front end over all of it.
"""

from .bath import (
    AngularIntegral,
    BathGrid,
    DipolePair,
    FieldConstants,
    FullState,
    angular_dipole_integral,
    build_bath,
    evolve_kernel,
    evolve_modes,
    fit_decay_rate,
    gamma_from_dipole,
    memory_kernel,
)
from .errors import (
    ConfigError,
    EnvelopeViolation,
    InsufficientSamples,
    NonFiniteAmplitude,
    OrthogonalPrePost,
    SimulationError,
    StepSizeTooLarge,
    UnphysicalRegion,
)
from .markov import (
    FORM_FULL_COT,
    FORM_SMALL_EPSILON,
    AmplitudeTrajectory,
    ModelParams,
    ScatteringTime,
    TauCurveRow,
    alpha_of_t,
    effective_rate,
    markov_trajectory,
    mean_scattering_time,
    tau_curve,
)
from .qstate import (
    AtomicKet,
    Operator2,
    WeakValueResult,
    antisymmetric_state,
    postselect_state,
    sigma_z,
    symmetric_state,
    weak_value,
)
from .trajectory import (
    RngSpec,
    SampleSummary,
    conditional_arrival_density,
    conditional_arrival_mean,
    sample_conditional_arrivals,
    sample_scattering_times,
)

__version__ = "0.1.0"

__all__ = [
    "AngularIntegral",
    "AmplitudeTrajectory",
    "AtomicKet",
    "BathGrid",
    "ConfigError",
    "DipolePair",
    "EnvelopeViolation",
    "FieldConstants",
    "FORM_FULL_COT",
    "FORM_SMALL_EPSILON",
    "FullState",
    "InsufficientSamples",
    "ModelParams",
    "NonFiniteAmplitude",
    "Operator2",
    "OrthogonalPrePost",
    "RngSpec",
    "SampleSummary",
    "ScatteringTime",
    "SimulationError",
    "StepSizeTooLarge",
    "TauCurveRow",
    "UnphysicalRegion",
    "WeakValueResult",
    "alpha_of_t",
    "angular_dipole_integral",
    "antisymmetric_state",
    "build_bath",
    "conditional_arrival_density",
    "conditional_arrival_mean",
    "effective_rate",
    "evolve_kernel",
    "evolve_modes",
    "fit_decay_rate",
    "gamma_from_dipole",
    "markov_trajectory",
    "mean_scattering_time",
    "memory_kernel",
    "postselect_state",
    "sample_conditional_arrivals",
    "sample_scattering_times",
    "sigma_z",
    "symmetric_state",
    "tau_curve",
    "weak_value",
]
