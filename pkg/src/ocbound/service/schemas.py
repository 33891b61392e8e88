"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..certificate import GridOptions
from ..pipeline import RunConfig
from ..solver import SolverOptions


class ProblemSelector(BaseModel):
    name: str
    overrides: dict[str, float] = Field(default_factory=dict)


class SolverSettings(BaseModel):
    n: int = 1000
    tol: float = 1e-8
    max_iter: int = 10000


class GridSettings(BaseModel):
    omega_grid_n: int = 401
    sigma_grid_n: int = 61
    r0_grid_n: int = 2000
    quad_panels: int = 1000


class SamplingSettings(BaseModel):
    samples: int = 10000
    u_cap: float = 50.0
    seed: int = 0


class EmitFlags(BaseModel):
    trajectories: bool = True
    adjoint: bool = True
    probes: bool = False


class RunRequest(BaseModel):
    problem: ProblemSelector
    theorem: str = "auto"
    solver: SolverSettings = Field(default_factory=SolverSettings)
    grids: GridSettings = Field(default_factory=GridSettings)
    sampling: SamplingSettings = Field(default_factory=SamplingSettings)
    emit: EmitFlags = Field(default_factory=EmitFlags)
    reparam_m: int | None = None
    probes_n: int = 64
    lipschitz_pairs: int = 1000

    def to_config(self) -> RunConfig:
        return RunConfig(
            problem=self.problem.name,
            overrides=dict(self.problem.overrides),
            theorem=self.theorem,
            solver=SolverOptions(n=self.solver.n, tol=self.solver.tol,
                                 max_iter=self.solver.max_iter),
            grids=GridOptions(omega_grid_n=self.grids.omega_grid_n,
                              sigma_grid_n=self.grids.sigma_grid_n,
                              r0_grid_n=self.grids.r0_grid_n,
                              quad_panels=self.grids.quad_panels),
            samples=self.sampling.samples,
            u_cap=self.sampling.u_cap,
            seed=self.sampling.seed,
            reparam_m=self.reparam_m,
            emit_trajectories=self.emit.trajectories,
            emit_adjoint=self.emit.adjoint,
            emit_probes=self.emit.probes,
            probes_n=self.probes_n,
            lipschitz_pairs=self.lipschitz_pairs,
        )


class CertifyRequest(BaseModel):
    problem: ProblemSelector
    theorem: str = "auto"
    grids: GridSettings = Field(default_factory=GridSettings)
    sampling: SamplingSettings = Field(default_factory=SamplingSettings)

    def to_config(self) -> RunConfig:
        return RunRequest(problem=self.problem, theorem=self.theorem,
                          grids=self.grids, sampling=self.sampling).to_config()


class SolveRequest(BaseModel):
    problem: ProblemSelector
    solver: SolverSettings = Field(default_factory=SolverSettings)

    def to_config(self) -> RunConfig:
        return RunRequest(problem=self.problem, solver=self.solver).to_config()


class VerifyRequest(BaseModel):
    certificate: dict
    solution_csv: str
    reparam_m: int | None = None


class PipelineResponse(BaseModel):
    exit_code: int
    summary: dict
    files: dict[str, str]


class ProblemInfo(BaseModel):
    name: str
    summary: str
    dim_x: int
    dim_u: int
    structure: str
    constants: dict[str, float]


class ProblemListResponse(BaseModel):
    problems: list[ProblemInfo]


class HealthResponse(BaseModel):
    status: str
    version: str
