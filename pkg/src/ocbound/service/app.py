"""FastAPI service exposing the certification pipeline.

The service is stateless: every endpoint returns artifact file contents as
text, and clients decide where to store them.  Invalid configuration maps
to HTTP 400; failed checks are ordinary results carried by the exit code.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, pipeline, problems
from .schemas import (CertifyRequest, HealthResponse, PipelineResponse,
                      ProblemInfo, ProblemListResponse, RunRequest,
                      SolveRequest, VerifyRequest)

app = FastAPI(
    title="ocbound",
    version=__version__,
    description="Certified control bounds for free-endpoint Lagrange problems",
)


def _respond(result: pipeline.PipelineResult) -> PipelineResponse:
    return PipelineResponse(exit_code=result.exit_code, summary=result.summary,
                            files=result.files)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/problems", response_model=ProblemListResponse)
def list_problems() -> ProblemListResponse:
    infos = [ProblemInfo(**problems.describe(name)) for name in problems.available()]
    return ProblemListResponse(problems=infos)


@app.post("/run", response_model=PipelineResponse)
def run(request: RunRequest) -> PipelineResponse:
    try:
        return _respond(pipeline.run_pipeline(request.to_config()))
    except pipeline.ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/certify", response_model=PipelineResponse)
def certify(request: CertifyRequest) -> PipelineResponse:
    try:
        return _respond(pipeline.certify_pipeline(request.to_config()))
    except pipeline.ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/solve", response_model=PipelineResponse)
def solve(request: SolveRequest) -> PipelineResponse:
    try:
        return _respond(pipeline.solve_pipeline(request.to_config()))
    except pipeline.ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.post("/verify", response_model=PipelineResponse)
def verify(request: VerifyRequest) -> PipelineResponse:
    try:
        return _respond(pipeline.verify_pipeline(request.certificate,
                                                 request.solution_csv,
                                                 reparam_m=request.reparam_m))
    except (pipeline.ConfigError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
