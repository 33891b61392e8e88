"""End-to-end orchestration: conditions, certificate, solve, reparam, adjoint.

Each stage failure maps to a distinct exit code and a diagnostic entry in
the summary; artifacts computed before the failure are still emitted.  All
artifact content is produced here as deterministic text so that callers
(CLI or HTTP service) only decide where to put it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import certificate as cert_mod
from . import inclusion as inc_mod
from . import pmp as pmp_mod
from . import problems, serialize
from .certificate import Certificate, CertificationError, GridOptions
from .numerics import ball_from_unit, halton_points, unit_directions
from .reparam import ReparamError, to_time_optimal
from .solver import ControlSolution, SolverOptions, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONDITIONS = 3
EXIT_CERTIFICATE = 4
EXIT_SOLVER = 5
EXIT_REPARAM = 6
EXIT_PMP = 7
EXIT_INCLUSION = 8
EXIT_BOUND = 9

EQUIVALENCE_TOL = 1e-8

THEOREM_CHOICES = ("auto", "force-1", "force-2")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str
    overrides: dict = field(default_factory=dict)
    theorem: str = "auto"
    solver: SolverOptions = SolverOptions()
    grids: GridOptions = GridOptions()
    samples: int = 10000
    u_cap: float = 50.0
    seed: int = 0
    reparam_m: int | None = None
    emit_trajectories: bool = True
    emit_adjoint: bool = True
    emit_probes: bool = False
    probes_n: int = 64
    lipschitz_pairs: int = 1000

    def config_echo(self) -> dict:
        return {
            "theorem": self.theorem,
            "solver_n": self.solver.n,
            "solver_tol": self.solver.tol,
            "solver_max_iter": self.solver.max_iter,
            "samples": self.samples,
            "u_cap": self.u_cap,
            "seed": self.seed,
            "reparam_m": self.reparam_m,
            "probes_n": self.probes_n,
            "lipschitz_pairs": self.lipschitz_pairs,
        }


@dataclass
class PipelineResult:
    exit_code: int
    summary: dict
    files: dict[str, str]


def build_problem(cfg: RunConfig) -> problems.ProblemSpec:
    try:
        spec = problems.builtin(cfg.problem, cfg.overrides)
    except problems.UnknownProblemError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.theorem not in THEOREM_CHOICES:
        raise ConfigError(f"theorem selector must be one of {', '.join(THEOREM_CHOICES)}")
    if cfg.theorem == "force-1" and spec.structure is not problems.Structure.AUTONOMOUS:
        raise ConfigError(
            f"--theorem force-1 needs an autonomous problem; '{spec.name}' is "
            f"{spec.structure.value}")
    if cfg.theorem == "force-2" and spec.structure is not problems.Structure.TIME_VARYING_G_ONLY:
        raise ConfigError(
            f"--theorem force-2 needs time-varying-g structure; '{spec.name}' is "
            f"{spec.structure.value}")
    return spec


def _solution_from_arrays(spec, grid, u, x) -> ControlSolution:
    from .numerics import trapezoid

    L_nodes = np.array([float(spec.L(float(grid[k]), x[k], u[k]))
                        for k in range(grid.shape[0])])
    cost = trapezoid(L_nodes, grid[1] - grid[0])
    return ControlSolution(grid=grid, u=u, x=x, cost=cost, grad_norm_final=0.0,
                           iterations=0, converged=True)


def _inclusion_stage(spec, cert: Certificate, cfg: RunConfig):
    """Support probes plus Lipschitz pair checks; returns (summary, probes)."""
    n = spec.dim_x
    unit = halton_points(1 + n, cfg.probes_n, cfg.seed + 1)
    t_s = unit[:, 0]
    y_s = ball_from_unit(unit[:, 1:], cert.R_omega)
    dirs = unit_directions(1 + n, cfg.probes_n, cfg.seed + 2)

    probes = []
    worst_v0 = np.inf
    worst_v = np.inf
    nonneg_support = True
    for k in range(cfg.probes_n):
        probe = inc_mod.support_function(spec, cert.beta, float(t_s[k]), y_s[k], dirs[k])
        m0, m1 = inc_mod.velocity_bound_margins(spec, cert.beta, probe)
        worst_v0 = min(worst_v0, m0)
        worst_v = min(worst_v, m1)
        nonneg_support = nonneg_support and probe.support_value >= 0.0
        probes.append(probe)

    eta = cert.eta if cert.eta is not None else cert_mod.compute_eta(spec, cert.beta, cfg.grids)
    pair_unit = halton_points(2 * (1 + n), cfg.lipschitz_pairs, cfg.seed + 3)
    pairs = []
    for k in range(cfg.lipschitz_pairs):
        t1 = float(pair_unit[k, 0])
        y1 = ball_from_unit(pair_unit[k:k + 1, 1:1 + n], cert.R_omega)[0]
        t2 = float(pair_unit[k, 1 + n])
        y2 = ball_from_unit(pair_unit[k:k + 1, 2 + n:], cert.R_omega)[0]
        pairs.append(((t1, y1), (t2, y2)))
    lipschitz = inc_mod.lipschitz_probe(spec, cert.beta, eta, pairs)

    passed = (worst_v0 >= -1e-12 and worst_v >= -1e-12 and nonneg_support
              and lipschitz.passed)
    summary = {
        "status": "pass" if passed else "fail",
        "probes": cfg.probes_n,
        "min_slowdown_margin": float(worst_v0),
        "min_velocity_margin": float(worst_v),
        "origin_membership": nonneg_support,
        "lipschitz": lipschitz.to_dict(),
    }
    return summary, probes, passed


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Full run: every enabled stage, artifacts as text, one exit code."""
    spec = build_problem(cfg)

    files: dict[str, str] = {}
    stages: dict[str, dict] = {}
    exit_code = EXIT_OK
    headline = None

    summary: dict = {
        "problem": {"name": cfg.problem, "overrides": dict(cfg.overrides)},
        "config": cfg.config_echo(),
    }

    def finish() -> PipelineResult:
        summary["headline"] = headline
        summary["stages"] = stages
        summary["exit_code"] = exit_code
        files["summary.json"] = serialize.json_text(summary)
        return PipelineResult(exit_code=exit_code, summary=summary, files=files)

    # 1. structural conditions
    report = cert_mod.verify_conditions(spec, samples=cfg.samples, u_cap=cfg.u_cap,
                                        seed=cfg.seed, opts=cfg.grids)
    stages["conditions"] = {
        "status": "pass" if report.passed else "fail",
        "margins": {r.condition: r.margin for r in report.results},
    }
    if not report.passed:
        failing = [r.condition for r in report.results if not r.passed]
        stages["conditions"]["detail"] = f"conditions failed: {', '.join(failing)}"
        stages["conditions"]["report"] = report.to_dict()
        exit_code = EXIT_CONDITIONS
        return finish()

    # 2. certificate
    try:
        cert = cert_mod.build_certificate(spec, cfg.grids, condition_report=report,
                                          overrides=cfg.overrides)
    except CertificationError as exc:
        stages["certificate"] = {"status": "fail", "detail": str(exc)}
        exit_code = EXIT_CERTIFICATE
        return finish()
    files["certificate.json"] = serialize.json_text(cert.to_dict())
    stages["certificate"] = {"status": "pass", "ell": cert.ell,
                             "theorem_used": cert.theorem_used, "beta": cert.beta}

    # 3. solve
    sol = solve(spec, cfg.solver)
    if cfg.emit_trajectories:
        files["solution.csv"] = serialize.solution_csv(sol)
    stages["solve"] = {
        "status": "pass" if sol.converged else "fail",
        "cost": sol.cost,
        "iterations": sol.iterations,
        "grad_norm_final": sol.grad_norm_final,
        "warning": sol.warning,
    }
    headline = {
        "max_control_norm": sol.max_control_norm,
        "ell": cert.ell,
        "bound_satisfied": bool(sol.max_control_norm <= cert.ell),
    }
    if not sol.converged:
        exit_code = EXIT_SOLVER
        return finish()

    # 4. reparameterization and value equivalence
    try:
        traj = to_time_optimal(spec, sol, cert.beta, m_nodes=cfg.reparam_m)
    except ReparamError as exc:
        stages["reparam"] = {"status": "fail", "detail": str(exc)}
        exit_code = EXIT_REPARAM
        return finish()
    residual = abs(traj.T - (sol.cost + cert.beta)) / traj.T
    stages["reparam"] = {
        "status": "pass" if residual <= EQUIVALENCE_TOL else "fail",
        "T": traj.T,
        "equivalence_residual": residual,
    }
    if cfg.emit_trajectories:
        files["timeoptimal.csv"] = serialize.trajectory_csv(traj)
    if residual > EQUIVALENCE_TOL:
        exit_code = EXIT_REPARAM
        return finish()

    # 5. adjoint verification
    adj = pmp_mod.integrate_adjoint(spec, cert, traj)
    pmp_report = pmp_mod.residual_report(spec, cert, traj, adj)
    if cfg.emit_adjoint:
        files["adjoint.csv"] = serialize.adjoint_csv(adj)
    files["pmp_report.json"] = serialize.json_text(pmp_report.to_dict())
    stages["pmp"] = {
        "status": "pass" if pmp_report.passed else "fail",
        "failing": [c.name for c in pmp_report.checks if not c.passed],
    }
    if not pmp_report.passed:
        exit_code = EXIT_PMP
        return finish()

    # 6. velocity-set probes (optional)
    if cfg.emit_probes:
        inc_summary, probes, inc_passed = _inclusion_stage(spec, cert, cfg)
        stages["inclusion"] = inc_summary
        files["probes.csv"] = serialize.probes_csv(probes)
        if not inc_passed:
            exit_code = EXIT_INCLUSION
            return finish()
    else:
        stages["inclusion"] = {"status": "skipped"}

    if not headline["bound_satisfied"]:
        exit_code = EXIT_BOUND
    return finish()


def certify_pipeline(cfg: RunConfig) -> PipelineResult:
    """Conditions plus the constants pipeline; no trajectory work."""
    spec = build_problem(cfg)
    files: dict[str, str] = {}
    summary: dict = {"problem": {"name": cfg.problem, "overrides": dict(cfg.overrides)}}

    report = cert_mod.verify_conditions(spec, samples=cfg.samples, u_cap=cfg.u_cap,
                                        seed=cfg.seed, opts=cfg.grids)
    if not report.passed:
        summary["status"] = "conditions-failed"
        summary["report"] = report.to_dict()
        return PipelineResult(EXIT_CONDITIONS, summary, files)
    try:
        cert = cert_mod.build_certificate(spec, cfg.grids, condition_report=report,
                                          overrides=cfg.overrides)
    except CertificationError as exc:
        summary["status"] = "refused"
        summary["detail"] = str(exc)
        return PipelineResult(EXIT_CERTIFICATE, summary, files)
    files["certificate.json"] = serialize.json_text(cert.to_dict())
    summary["status"] = "pass"
    summary["certificate"] = cert.to_dict()
    return PipelineResult(EXIT_OK, summary, files)


def solve_pipeline(cfg: RunConfig) -> PipelineResult:
    """Solver stage alone."""
    spec = build_problem(cfg)
    sol = solve(spec, cfg.solver)
    files = {"solution.csv": serialize.solution_csv(sol)}
    summary = {
        "problem": {"name": cfg.problem, "overrides": dict(cfg.overrides)},
        "cost": sol.cost,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "grad_norm_final": sol.grad_norm_final,
        "max_control_norm": sol.max_control_norm,
        "warning": sol.warning,
    }
    return PipelineResult(EXIT_OK if sol.converged else EXIT_SOLVER, summary, files)


def verify_pipeline(certificate_data: dict, solution_csv: str,
                    reparam_m: int | None = None) -> PipelineResult:
    """Adjoint verification against previously produced artifacts."""
    cert = Certificate.from_dict(certificate_data)
    try:
        spec = problems.builtin(cert.problem, cert.overrides)
    except problems.UnknownProblemError as exc:
        raise ConfigError(str(exc)) from exc
    if cert.beta is None or cert.ell is None:
        raise ConfigError("certificate is incomplete; run certify first")

    grid, u, x = serialize.parse_solution_csv(solution_csv)
    sol = _solution_from_arrays(spec, grid, u, x)

    files: dict[str, str] = {}
    summary: dict = {"problem": {"name": cert.problem, "overrides": dict(cert.overrides)}}
    try:
        traj = to_time_optimal(spec, sol, cert.beta, m_nodes=reparam_m)
    except ReparamError as exc:
        summary["status"] = "fail"
        summary["detail"] = str(exc)
        return PipelineResult(EXIT_REPARAM, summary, files)

    adj = pmp_mod.integrate_adjoint(spec, cert, traj)
    report = pmp_mod.residual_report(spec, cert, traj, adj)
    files["adjoint.csv"] = serialize.adjoint_csv(adj)
    files["pmp_report.json"] = serialize.json_text(report.to_dict())
    summary["status"] = "pass" if report.passed else "fail"
    summary["failing"] = [c.name for c in report.checks if not c.passed]
    summary["max_control_norm"] = sol.max_control_norm
    summary["ell"] = cert.ell
    summary["bound_satisfied"] = bool(sol.max_control_norm <= cert.ell)
    code = EXIT_OK if report.passed else EXIT_PMP
    if report.passed and not summary["bound_satisfied"]:
        code = EXIT_BOUND
    return PipelineResult(code, summary, files)
