"""Normalized solutions of mixed fractional nonlinear Schroedinger equations.

Spectral discretization on a periodic box, the fiber-map geometry of the
energy, explicit admissibility thresholds, constrained solvers for the local
minimizer and the mountain-pass solution, and a manifest-driven batch front end.
"""

from .constants import ConstantEstimate, estimate_gn_constant, estimate_sobolev_constant, gn_quotient, sobolev_quotient
from .errors import (
    EstimationError,
    FiberRangeError,
    FracNLSError,
    GeometryDegenerateError,
    InvalidFieldError,
    ManifestError,
    ParameterError,
    PreconditionError,
    ProjectionError,
    RegimeError,
    ResolutionError,
)
from .fieldio import read_field, write_field, write_field_csv
from .solver import (
    LevelName,
    SolutionKind,
    SolutionRecord,
    SolverConfig,
    constrained_gradient,
    gaussian_seed,
    lagrange_multiplier,
    local_minimize,
    mountain_pass,
    pde_residual,
    project_to_sphere,
)
from .spectral import (
    Field,
    GridDescriptor,
    SpectralMultiplier,
    apply_fractional_laplacian,
    lp_norm_pow,
    mass,
    multiplier,
    rearrange_radial_decreasing,
    seminorm_sq,
)
from .thresholds import (
    ConditionResult,
    ConstantsTable,
    CriticalThresholds,
    HGeometry,
    Provenance,
    a1_threshold_mu,
    check_A0,
    check_A1,
    check_A2,
    critical_thresholds,
    h_critical,
    h_geometry,
    h_subcritical,
)
from .variational import (
    Classification,
    FiberCoefficients,
    FiberGeometry,
    ProblemParams,
    Regime,
    classify,
    dilate,
    energy,
    fiber_coefficients,
    fiber_deriv,
    fiber_geometry,
    fiber_second_deriv,
    fiber_value,
    pohozaev,
)

__all__ = [
    "Classification",
    "ConditionResult",
    "ConstantEstimate",
    "ConstantsTable",
    "CriticalThresholds",
    "EstimationError",
    "FiberCoefficients",
    "FiberGeometry",
    "FiberRangeError",
    "Field",
    "FracNLSError",
    "GeometryDegenerateError",
    "GridDescriptor",
    "HGeometry",
    "InvalidFieldError",
    "LevelName",
    "ManifestError",
    "ParameterError",
    "PreconditionError",
    "ProblemParams",
    "ProjectionError",
    "Provenance",
    "Regime",
    "RegimeError",
    "ResolutionError",
    "SolutionKind",
    "SolutionRecord",
    "SolverConfig",
    "SpectralMultiplier",
    "a1_threshold_mu",
    "apply_fractional_laplacian",
    "check_A0",
    "check_A1",
    "check_A2",
    "classify",
    "constrained_gradient",
    "critical_thresholds",
    "dilate",
    "energy",
    "estimate_gn_constant",
    "estimate_sobolev_constant",
    "fiber_coefficients",
    "fiber_deriv",
    "fiber_geometry",
    "fiber_second_deriv",
    "fiber_value",
    "gaussian_seed",
    "gn_quotient",
    "h_critical",
    "h_geometry",
    "h_subcritical",
    "lagrange_multiplier",
    "local_minimize",
    "lp_norm_pow",
    "mass",
    "mountain_pass",
    "multiplier",
    "pde_residual",
    "pohozaev",
    "project_to_sphere",
    "read_field",
    "rearrange_radial_decreasing",
    "seminorm_sq",
    "sobolev_quotient",
    "write_field",
    "write_field_csv",
]

__version__ = "0.1.0"
