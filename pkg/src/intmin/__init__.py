"""Minimisation and certification of nonlocal pairwise interaction
energies over particle approximations of probability measures."""

from .certify import (
    BoundParameters,
    CertificateReport,
    CertifyOptions,
    WitnessOptions,
    certify_all,
    check_local_mass,
    detect_gaps,
    diameter,
    euler_lagrange_residual,
    theoretical_bound,
)
from .energy import (
    ParticleConfiguration,
    discrete_energy,
    discrete_gradient,
    field_at_particles,
    potential_field,
)
from .minimise import (
    Backtracking,
    FixedStep,
    FlowResult,
    MinimisationResult,
    MinimiseOptions,
    flow_simulate,
    minimise_discrete,
)
from .potential import (
    PotentialProfile,
    PotentialSpec,
    Tail,
    build_profile,
    evaluate,
    gradient,
    validate_hypotheses,
)
from .stability import (
    BallWitness,
    QuadratureOptions,
    StabilityReport,
    WitnessScanOptions,
    classify,
    instability_witness,
    minimiser_existence,
    monte_carlo_ball_energy,
    morse_criterion,
    morse_space_integral,
    uniform_ball_energy,
)

__version__ = "0.1.0"

__all__ = [
    "BallWitness",
    "Backtracking",
    "BoundParameters",
    "CertificateReport",
    "CertifyOptions",
    "FixedStep",
    "FlowResult",
    "MinimisationResult",
    "MinimiseOptions",
    "ParticleConfiguration",
    "PotentialProfile",
    "PotentialSpec",
    "QuadratureOptions",
    "StabilityReport",
    "Tail",
    "WitnessOptions",
    "WitnessScanOptions",
    "build_profile",
    "certify_all",
    "check_local_mass",
    "classify",
    "detect_gaps",
    "diameter",
    "discrete_energy",
    "discrete_gradient",
    "euler_lagrange_residual",
    "evaluate",
    "field_at_particles",
    "flow_simulate",
    "gradient",
    "instability_witness",
    "minimise_discrete",
    "minimiser_existence",
    "monte_carlo_ball_energy",
    "morse_criterion",
    "morse_space_integral",
    "potential_field",
    "theoretical_bound",
    "uniform_ball_energy",
    "validate_hypotheses",
]
