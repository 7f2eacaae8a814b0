"""Numerical laboratory for compactly supported self-similar solutions of a
sublinear Schrodinger equation.

The pipeline: validate model parameters, solve the gauge-transformed
stationary profile equation on a bounded grid, transform back to the
physical profile, run the energy-method localization analysis, reconstruct
the space-time solution and verify it dynamically.
"""

from .errors import (
    CenterUnsupported,
    ConfigError,
    ConvergenceFailure,
    DomainError,
    InadmissibleCoefficient,
    InnerNonConvergence,
    InvalidDomain,
    InvalidExponent,
    MissingArtifacts,
    NlsLabError,
    NonConvergence,
    NonpositiveTime,
    OutOfRange,
    SingularOperator,
)
from .evolution import (
    EvolutionRun,
    energy_balance,
    evolve,
    evolve_selfsimilar,
    extinction_probe,
    mass_balance,
    step,
)
from .grids import (
    ComplexField,
    Grid,
    LinearOperator,
    assemble_operator,
    build_grid,
    gradient,
    integrate_ball,
    shell_flux,
    smallest_eigenvalue,
)
from .localization import (
    EnergyProfile,
    LocalizationReport,
    check_energy_inequality,
    check_identities,
    energy_inequality_tolerance,
    energy_profile,
    k_eps_containment,
    lemma_constants,
    rho_max,
    rho_max_value,
    support_radius,
    thmG_margin,
)
from .params import (
    DerivedCoefficients,
    ExponentSet,
    ModelParams,
    derive_coefficients,
    exponent_set,
    uniqueness_radius,
    validate_params,
)
from .profile import (
    ProfileProblem,
    ProfileSolution,
    residual,
    solve_profile,
    sublinear_term,
    symmetry_check,
    uniqueness_probe,
)
from .scenario import RunReport, emit_plots, load_scenario, run_scenario, sweep
from .selfsimilar import (
    SelfSimilarForcing,
    SelfSimilarSolution,
    evaluate_forcing,
    evaluate_solution,
    gauge_backward,
    gauge_forward,
    norm_scaling,
    profile_equation_residual,
    scaling_invariance_check,
)

__version__ = "0.1.0"
