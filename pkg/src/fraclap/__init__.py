"""Restricted fractional Laplacian toolkit.

Discretizes (-Delta)^s on bounded 1D/2D domains with exterior-zero
extension, solves semilinear Dirichlet problems and verifies the fractional
Pohozaev identity, the integration-by-parts formula and the boundary
log-singularity structure of the half-Laplacian.
"""

from .boundary_trace import (
    BoundaryTrace,
    LogFit,
    gradient_growth,
    log_singularity_fit,
    surface_functional,
    trace,
)
from .geometry import Domain, DomainError, make_domain, star_shapedness_margin
from .operator import (
    Discretization,
    FracOperator,
    SolutionField,
    WholeSpaceField,
    apply_pointwise_oracle,
    assemble,
    half_laplacian,
    load_operator,
    make_discretization,
    normalization_constant,
    save_operator,
    torsion_rhs_constant,
)
from .pohozaev import (
    PohozaevReport,
    ScalingReport,
    calibrated_identity_tolerance,
    ibp_residual,
    nonexistence_scan,
    pohozaev_residual,
    scaling_diagnostics,
    scaling_lhs_check,
    scan_to_csv,
    supercritical_gap,
)
from .solver import (
    NonConvergence,
    Nonlinearity,
    SolveReport,
    jacobian_check,
    power_seed,
    solve_linear,
    solve_semilinear,
    torsion_scale,
)

__all__ = [
    "BoundaryTrace",
    "LogFit",
    "gradient_growth",
    "log_singularity_fit",
    "surface_functional",
    "trace",
    "Domain",
    "DomainError",
    "make_domain",
    "star_shapedness_margin",
    "Discretization",
    "FracOperator",
    "SolutionField",
    "WholeSpaceField",
    "apply_pointwise_oracle",
    "assemble",
    "half_laplacian",
    "load_operator",
    "make_discretization",
    "normalization_constant",
    "save_operator",
    "torsion_rhs_constant",
    "PohozaevReport",
    "ScalingReport",
    "calibrated_identity_tolerance",
    "ibp_residual",
    "nonexistence_scan",
    "pohozaev_residual",
    "scaling_diagnostics",
    "scaling_lhs_check",
    "scan_to_csv",
    "supercritical_gap",
    "NonConvergence",
    "Nonlinearity",
    "SolveReport",
    "jacobian_check",
    "power_seed",
    "solve_linear",
    "solve_semilinear",
    "torsion_scale",
]
