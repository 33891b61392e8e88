"""Certified sup-norm bounds for optimal controls of Lagrange problems.

The package computes explicit a-priori bounds on the optimal control of
free-endpoint, control-affine Lagrange problems from problem data alone,
then cross-validates them: a direct single-shooting solver produces the
optimal control, a time reparameterization maps it to the equivalent
time-optimal form, and the adjoint conditions the bound derivation relies
on are checked as numerical residuals.
"""

__version__ = "0.1.0"

from .certificate import (Certificate, CertificationError, ConditionReport,
                          GridOptions, build_certificate, choose_T0,
                          compute_bound, compute_constants, compute_eta, find_r0,
                          sigma, sigma_inverse, verify_conditions)
from .inclusion import InclusionProbe, lipschitz_probe, support_function
from .pipeline import ConfigError, PipelineResult, RunConfig, run_pipeline
from .pmp import AdjointPath, PMPReport, integrate_adjoint, residual_report
from .problems import (EvaluationError, ProblemSpec, Structure,
                       UnknownProblemError, available, builtin, evaluate)
from .reparam import (ReparamError, TimeOptimalTrajectory, from_time_optimal,
                      to_time_optimal)
from .solver import (ControlSolution, SolverError, SolverOptions,
                     cost_and_gradient, integrate_state, solve)

__all__ = [
    "__version__",
    "AdjointPath", "Certificate", "CertificationError", "ConditionReport",
    "ConfigError", "ControlSolution", "EvaluationError", "GridOptions",
    "InclusionProbe", "PMPReport", "PipelineResult", "ProblemSpec",
    "ReparamError", "RunConfig", "SolverError", "SolverOptions", "Structure",
    "TimeOptimalTrajectory", "UnknownProblemError",
    "available", "build_certificate", "builtin", "choose_T0", "compute_bound",
    "compute_constants", "compute_eta", "cost_and_gradient", "evaluate",
    "find_r0", "from_time_optimal", "integrate_adjoint", "integrate_state",
    "lipschitz_probe", "residual_report", "run_pipeline", "sigma",
    "sigma_inverse", "solve", "support_function", "to_time_optimal",
    "verify_conditions",
]
