"""Local discontinuous Galerkin solver for 2D singularly perturbed
convection-diffusion on layer-adapted meshes."""
from .assembly import (LDGSystem, PenaltyParams, SolutionTriple, assemble, energy_norm,
                       weighted_l2_norm)
from .errors import ErrorReport, compute_errors
from .estimator import LDGSolver
from .exceptions import SolverError, ValidationError
from .mesh import (MeshParams, Region, TensorMesh, build_mesh, classify_element, region_codes,
                   transition_params)
from .problem import (ManufacturedSolution, ProblemCoefficients, eval_exact,
                      validate_coefficient_condition)
from .projection import (ProjectedField, projection_error_report, project_1d, project_2d,
                         project_triple)
from .quadrature import DGSpace, QuadratureRule, eval_basis, gauss_legendre, legendre_eval
from .solve import Factorization, factor, solve, solve_vector
from .study import (RateTable, StudyConfig, rate, run_convergence, run_projection_rates,
                    run_regime_study, run_robustness)

__version__ = "0.1.0"

__all__ = [
    "DGSpace", "ErrorReport", "Factorization", "LDGSolver", "LDGSystem", "ManufacturedSolution",
    "MeshParams", "PenaltyParams", "ProblemCoefficients", "ProjectedField", "QuadratureRule",
    "RateTable", "Region", "SolutionTriple", "SolverError", "StudyConfig", "TensorMesh",
    "ValidationError", "assemble", "build_mesh", "classify_element", "compute_errors",
    "energy_norm", "eval_basis", "eval_exact", "factor", "gauss_legendre", "legendre_eval",
    "project_1d", "project_2d", "project_triple", "projection_error_report", "rate",
    "region_codes", "run_convergence", "run_projection_rates", "run_regime_study",
    "run_robustness", "solve", "solve_vector", "transition_params",
    "validate_coefficient_condition", "weighted_l2_norm",
]
