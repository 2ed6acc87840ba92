"""Solver and regularity diagnostics for nonlocal max-min equations with the half-Laplacian."""

__version__ = "0.1.0"

from .envelopes import EnvelopeResult, gamma_gap, inf_convolution, sup_convolution
from .fraclap import (
    KernelQuadrature,
    build_quadrature,
    eval_I_kappa,
    eval_I_sup_kappa,
    fraclap,
    normalization_constant,
)
from .grids import DomainGeometry, GridFunction, grid_lipschitz
from .problem import (
    AssumptionReport,
    CoefficientField,
    ControlGrid,
    ProblemSpec,
    ReducedProblem,
    bracket_bounds,
    effective_constants,
    reduce_by_diffusion,
    spec_from_dict,
    spec_from_json,
    validate_assumptions,
)
from .regularity import (
    CascadeTable,
    DiffQuotient,
    HolderFit,
    LipschitzCertificate,
    SpaceTimeField,
    diff_quotient,
    doubling_max,
    dq_residuals,
    holder_fit,
    lipschitz_certificate,
    measured_nonlocal_constant,
    oscillation_cascade,
    time_lift,
    two_point_max,
)
from .solver import SchemeConfig, SolverReport, comparison_check, residual, solve

__all__ = [
    "__version__",
    "AssumptionReport",
    "CascadeTable",
    "CoefficientField",
    "ControlGrid",
    "DiffQuotient",
    "DomainGeometry",
    "EnvelopeResult",
    "GridFunction",
    "HolderFit",
    "KernelQuadrature",
    "LipschitzCertificate",
    "ProblemSpec",
    "ReducedProblem",
    "SchemeConfig",
    "SolverReport",
    "SpaceTimeField",
    "bracket_bounds",
    "build_quadrature",
    "comparison_check",
    "diff_quotient",
    "doubling_max",
    "dq_residuals",
    "effective_constants",
    "eval_I_kappa",
    "eval_I_sup_kappa",
    "fraclap",
    "gamma_gap",
    "grid_lipschitz",
    "holder_fit",
    "inf_convolution",
    "lipschitz_certificate",
    "measured_nonlocal_constant",
    "normalization_constant",
    "oscillation_cascade",
    "reduce_by_diffusion",
    "residual",
    "solve",
    "spec_from_dict",
    "spec_from_json",
    "sup_convolution",
    "time_lift",
    "two_point_max",
    "validate_assumptions",
]
