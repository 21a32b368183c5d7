"""Desk-scale quantum sensing of gradient fields via Bloch oscillations.

Builds Stark and XXZ-sector Hamiltonians, evolves them exactly, and turns
the dynamics into metrology: quantum/classical Fisher information, scaling
exponents, dephasing trajectories, and maximum-likelihood estimation of the
gradient field.
"""

from .basis import (
    Configuration,
    LatticeSpec,
    SectorBasis,
    centered_initial,
    default_initial,
    enumerate_sector,
    neel_initial,
    single_site_initial,
)
from .dynamics import (
    EvolutionWorkspace,
    OccupationProfile,
    QuantumState,
    SpectralDecomposition,
    bessel_j,
    bloch_period,
    diagonalize,
    evolve,
    evolve_derivative,
    evolve_derivative_fd,
    occupation_profile,
    propagator,
    site_occupations,
    wannier_stark_analytic,
)
from .errors import (
    ConfigError,
    DomainError,
    EstimationError,
    NumericError,
    ResourceError,
    StarkProbeError,
)
from .fisher import (
    FisherPoint,
    LongTimeQFI,
    ProbabilityVector,
    cfi,
    configuration_probs,
    long_time_normalized_qfi,
    qfi_mixed,
    qfi_pure,
    sweep_long_time,
)
from .hamiltonian import (
    GradientGenerator,
    HamiltonianMatrix,
    build_single_particle,
    build_xxz_sector,
    gradient_generator,
    seminorm,
)
from .open_dynamics import (
    DensityMatrix,
    DephasingSpec,
    dephasing_qfi_trajectory,
    integrate_master,
    lindblad_rhs,
)
from .estimation import (
    EstimateResult,
    LikelihoodGrid,
    MeasurementRecord,
    configuration_model,
    estimator_statistics,
    log_likelihood,
    mle,
    sample_configurations,
)
from .scaling import (
    ScalingFit,
    TransitionEstimate,
    alpha_at_transition,
    alpha_fit,
    beta_scan,
    critical_scaling,
    find_transition,
    fit_power_law,
    fixed_n_beta,
    plateau_scan,
)

__version__ = "0.1.0"
