"""HTTP service wrapping the solver and diagnostics.

The service owns all computation; clients (the bundled CLI or anything
speaking JSON) post a scenario plus overrides and receive the full report
payload, writing artifacts locally themselves.  Endpoints:

  GET  /health             liveness and version
  GET  /scenarios          names of the bundled scenario fixtures
  GET  /scenarios/{name}   one bundled scenario document
  POST /solve              trajectory CSV (t,x,u,ut,uxx) in the payload
  POST /sweep              eps-sweep report + norms CSV (eps,l,k,norm)
  POST /verify             per-eps energy verification report
  POST /bootstrap          reconstruction-identity report

Validation errors surface as 422 (schema, named fields) or 400 (hypothesis
violations such as a Dirac impulse under a polynomial width rule).
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .energy import HypothesisError
from .mollify import MollifyError
from .newmark import EvolveError
from .scenarios import (Scenario, ScenarioError, builtin_scenario_names,
                        load_builtin_scenario, resolution_warnings, run_mode)


class RunOverrides(BaseModel):
    """Request-time adjustments that do not belong in the scenario file."""

    eps_min_exp: Optional[int] = None   # overrides regularization.k_min
    eps_max_exp: Optional[int] = None   # overrides regularization.k_max
    strict: bool = False                # resolution warnings become errors
    l_max: Optional[int] = None         # sweep cascade depth
    ft_scale: float = 1.0               # verify: Gronwall exponent probe
    eps: Optional[float] = None         # solve: fixed eps (default finest)
    sample_points: int = 101            # solve: CSV x-grid
    stride: int = 10                    # solve: CSV time stride


class RunRequest(BaseModel):
    scenario: Scenario
    overrides: RunOverrides = RunOverrides()


class RunResponse(BaseModel):
    mode: str
    passed: bool
    report: dict


app = FastAPI(title="beamreg",
              description="clamped beam solver with mollified singular "
                          "coefficients and energy-bound verification",
              version=__version__)


def _prepare(req: RunRequest) -> Scenario:
    scenario = req.scenario
    ov = req.overrides
    if ov.eps_min_exp is not None or ov.eps_max_exp is not None:
        reg = scenario.regularization.model_copy(update={
            k: v for k, v in {"k_min": ov.eps_min_exp,
                              "k_max": ov.eps_max_exp}.items() if v is not None})
        scenario = scenario.model_copy(update={"regularization": reg})
        scenario = Scenario.model_validate(scenario.model_dump())
    if ov.strict:
        warn = resolution_warnings(scenario)
        if warn:
            raise HTTPException(status_code=400,
                                detail="strict mode: " + "; ".join(warn))
    return scenario


def _run(mode: str, req: RunRequest, **kwargs) -> RunResponse:
    scenario = _prepare(req)
    try:
        result = run_mode(scenario, mode, **kwargs)
    except (ScenarioError, MollifyError, HypothesisError, EvolveError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except RuntimeError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return RunResponse(mode=mode, passed=bool(result.get("passed", False)),
                       report=result)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/scenarios")
def scenario_names() -> dict:
    return {"names": builtin_scenario_names()}


@app.get("/scenarios/{name}")
def scenario_by_name(name: str) -> dict:
    try:
        return load_builtin_scenario(name).model_dump()
    except ScenarioError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc


@app.post("/solve", response_model=RunResponse)
def solve(req: RunRequest) -> RunResponse:
    ov = req.overrides
    return _run("solve", req, eps=ov.eps, sample_points=ov.sample_points,
                stride=ov.stride)


@app.post("/sweep", response_model=RunResponse)
def sweep_endpoint(req: RunRequest) -> RunResponse:
    return _run("sweep", req, l_max=req.overrides.l_max)


@app.post("/verify", response_model=RunResponse)
def verify(req: RunRequest) -> RunResponse:
    return _run("verify", req, ft_scale=req.overrides.ft_scale)


@app.post("/bootstrap", response_model=RunResponse)
def bootstrap(req: RunRequest) -> RunResponse:
    return _run("bootstrap", req)
