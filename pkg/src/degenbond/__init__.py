"""Fitted finite-volume solver for the degenerate parabolic equation of
zero-coupon bond pricing, with a classical reference scheme and a
convergence verification harness."""

from .analysis import (
    ErrorReport,
    NormAccumulator,
    RateTable,
    double_mesh_rates,
    error_norms,
    runge_rate,
)
from .assembly import SemiDiscreteSystem, assemble_system, load_vector, reaction_quadrature
from .config import RunConfig, build_problem, build_spatial_mesh, build_time_mesh, parse_config
from .fitted_flux import (
    FaceFlux,
    FluxKind,
    face_coefficient_values,
    interior_flux,
    left_boundary_flux,
    right_boundary_flux,
)
from .mesh import SpatialMesh, TimeMesh, graded_spatial, uniform_spatial, uniform_time
from .model import (
    BUILTIN_PROBLEMS,
    DriftDegeneracy,
    ExactSolution,
    FactoredCoefficients,
    ProblemSpec,
    classify_case,
    example_problem,
    factor_coefficients,
    manufactured_forcing,
    reaction_coefficient,
    validate_problem,
    with_manufactured_solution,
)
from .reference_scheme import assemble_scheme_b, march_scheme_b
from .timestep import (
    MarchResult,
    SolutionField,
    StepDiagnostics,
    TridiagonalSystem,
    build_step_system,
    check_m_matrix,
    march,
    solve_tridiagonal,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROBLEMS",
    "DriftDegeneracy",
    "ErrorReport",
    "ExactSolution",
    "FaceFlux",
    "FactoredCoefficients",
    "FluxKind",
    "MarchResult",
    "NormAccumulator",
    "ProblemSpec",
    "RateTable",
    "RunConfig",
    "SemiDiscreteSystem",
    "SolutionField",
    "SpatialMesh",
    "StepDiagnostics",
    "TimeMesh",
    "TridiagonalSystem",
    "assemble_scheme_b",
    "assemble_system",
    "build_problem",
    "build_spatial_mesh",
    "build_step_system",
    "build_time_mesh",
    "check_m_matrix",
    "classify_case",
    "double_mesh_rates",
    "error_norms",
    "example_problem",
    "face_coefficient_values",
    "factor_coefficients",
    "graded_spatial",
    "interior_flux",
    "left_boundary_flux",
    "load_vector",
    "manufactured_forcing",
    "march",
    "march_scheme_b",
    "parse_config",
    "reaction_coefficient",
    "reaction_quadrature",
    "right_boundary_flux",
    "runge_rate",
    "solve_tridiagonal",
    "uniform_spatial",
    "uniform_time",
    "validate_problem",
    "with_manufactured_solution",
]
