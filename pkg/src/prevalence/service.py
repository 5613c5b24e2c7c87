"""Stateless JSON API exposing the posterior computation.

POST /v1/posterior runs the same pipeline as the CLI (same seed, same
numbers) for one set of priors or up to four named prior scenarios, and
returns per-scenario grids downsampled for transport.  GET /healthz reports
liveness.  Listen address, port, and the allowed CORS origin come from flags
or the PREVALENCE_HOST / PREVALENCE_PORT / PREVALENCE_CORS_ORIGIN environment
variables.

Error contract: 400 carries a machine-readable violation list
[{field, constraint}], 413 flags request-cap violations before any work is
done, 422 reports computations that failed (vanishing mass, rejection budget,
support overflow, degenerate test).
"""

from __future__ import annotations

import argparse
import math
import os
import secrets

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .errors import (
    ComputationError,
    DegenerateTestError,
    RejectionBudgetError,
    SupportOverflowError,
    VanishingMassError,
)
from .inference import CalibrationCounts, McConfig, PosteriorGrid, PriorSet, SurveyCounts
from .numerics import ShapePair
from .pipeline import EstimateResult, EstimateSpec, run_estimate

MAX_SAMPLES = 1_000_000
MAX_GRID_M = 100_000
MAX_SCENARIOS = 4
TRANSPORT_POINTS = 2_001


class ShapeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a: float
    b: float


class PriorsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    u: ShapeModel = Field(default_factory=lambda: ShapeModel(a=1.0, b=1.0))
    v: ShapeModel = Field(default_factory=lambda: ShapeModel(a=1.0, b=1.0))


class SurveyModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    k: int
    n: int


class CalibrationModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    k_u: int
    n_u: int
    k_v: int
    n_v: int


class McModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n_samples: int = 10_000
    grid_m: int = 10_000
    seed: int | None = None
    max_rejection_iters: int = 1_000_000


class ScenarioModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    priors: PriorsModel


class PosteriorRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    survey: SurveyModel
    calibration: CalibrationModel
    priors: PriorsModel = Field(default_factory=PriorsModel)
    mc: McModel = Field(default_factory=McModel)
    level: float = 0.95
    reweight: float | None = None
    population: int | None = None
    oracle: bool = False
    scenarios: list[ScenarioModel] | None = None


def _violation(field: str, constraint: str) -> dict:
    return {"field": field, "constraint": constraint}


def check_caps(req: PosteriorRequest) -> list[dict]:
    caps = []
    if req.mc.n_samples > MAX_SAMPLES:
        caps.append(_violation("mc.n_samples", f"mc.n_samples <= {MAX_SAMPLES}"))
    if req.mc.grid_m > MAX_GRID_M:
        caps.append(_violation("mc.grid_m", f"mc.grid_m <= {MAX_GRID_M}"))
    return caps


def check_invariants(req: PosteriorRequest) -> list[dict]:
    v = []
    if req.survey.n < 1:
        v.append(_violation("survey.n", "survey.n >= 1"))
    if req.survey.k < 0:
        v.append(_violation("survey.k", "survey.k >= 0"))
    if 0 <= req.survey.n < req.survey.k:
        v.append(_violation("survey.k", "survey.k <= survey.n"))
    if req.calibration.n_u < 1:
        v.append(_violation("calibration.n_u", "calibration.n_u >= 1"))
    if req.calibration.n_v < 1:
        v.append(_violation("calibration.n_v", "calibration.n_v >= 1"))
    if not 0 <= req.calibration.k_u <= req.calibration.n_u:
        v.append(_violation("calibration.k_u", "0 <= calibration.k_u <= calibration.n_u"))
    if not 0 <= req.calibration.k_v <= req.calibration.n_v:
        v.append(_violation("calibration.k_v", "0 <= calibration.k_v <= calibration.n_v"))

    def check_priors(priors: PriorsModel, prefix: str):
        for side in ("u", "v"):
            shape = getattr(priors, side)
            for comp in ("a", "b"):
                val = getattr(shape, comp)
                if not (math.isfinite(val) and val > 0):
                    v.append(_violation(f"{prefix}.{side}.{comp}", f"{prefix}.{side}.{comp} > 0"))

    check_priors(req.priors, "priors")
    if req.mc.n_samples < 1:
        v.append(_violation("mc.n_samples", "mc.n_samples >= 1"))
    if req.mc.grid_m < 1:
        v.append(_violation("mc.grid_m", "mc.grid_m >= 1"))
    if req.mc.seed is not None and not 0 <= req.mc.seed < 2**64:
        v.append(_violation("mc.seed", "0 <= mc.seed < 2**64"))
    if req.mc.max_rejection_iters < 1:
        v.append(_violation("mc.max_rejection_iters", "mc.max_rejection_iters >= 1"))
    if not 0.0 < req.level < 1.0:
        v.append(_violation("level", "0 < level < 1"))
    if req.reweight is not None and req.reweight <= 0.0:
        v.append(_violation("reweight", "reweight > 0"))
    if req.population is not None and req.population < 1:
        v.append(_violation("population", "population >= 1"))
    if req.scenarios is not None:
        if not 1 <= len(req.scenarios) <= MAX_SCENARIOS:
            v.append(_violation("scenarios", f"1 <= len(scenarios) <= {MAX_SCENARIOS}"))
        for i, scenario in enumerate(req.scenarios or []):
            check_priors(scenario.priors, f"scenarios[{i}].priors")
    return v


def downsample(grid: PosteriorGrid) -> tuple[list[float], list[float]]:
    """Thin a grid to at most TRANSPORT_POINTS for transport.

    Keeps every ceil((M+1)/2001)-th point, the global maximum, and the final
    grid point, then re-normalizes so the transported densities average 1.
    """
    m1 = grid.grid_m + 1
    stride = math.ceil(m1 / TRANSPORT_POINTS)
    idx = set(range(0, m1, stride))
    idx.add(int(np.argmax(grid.densities)))
    idx.add(m1 - 1)
    order = sorted(idx)
    theta = grid.thetas[order]
    dens = grid.densities[order]
    dens = dens / dens.mean()
    return [float(t) for t in theta], [float(d) for d in dens]


def scenario_payload(name: str | None, spec: EstimateSpec, result: EstimateResult) -> dict:
    theta, densities = downsample(result.grid)
    payload = {
        "name": name,
        "grid": {"m": result.grid.grid_m, "theta": theta, "densities": densities},
        "summary": {
            "mean": result.summary.mean,
            "median": result.summary.median,
            "ci_low": result.summary.ci_low,
            "ci_high": result.summary.ci_high,
            "level": result.summary.level,
        },
        "delta": {
            "point": result.delta.point,
            "se": result.delta.se,
            "ci_low": result.delta.ci_low,
            "ci_high": result.delta.ci_high,
        },
        "counts": None,
        "diagnostics": {
            "rejection_rate": result.rejection_rate,
            "runtime_ms": result.runtime_ms,
            "seed": result.seed,
        },
    }
    if result.counts is not None:
        payload["counts"] = {
            "low": result.counts.low,
            "median": result.counts.median,
            "high": result.counts.high,
        }
    return payload


def create_app() -> FastAPI:
    app = FastAPI(title="prevalence", version=__version__)
    origin = os.environ.get("PREVALENCE_CORS_ORIGIN", "*")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        violations = []
        for err in exc.errors():
            loc = [str(part) for part in err.get("loc", ()) if part != "body"]
            violations.append(_violation(".".join(loc) or "body", err.get("msg", "invalid")))
        return JSONResponse(
            status_code=400, content={"error": "validation", "violations": violations}
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/posterior")
    async def posterior(req: PosteriorRequest):
        caps = check_caps(req)
        if caps:
            return JSONResponse(
                status_code=413, content={"error": "cap_exceeded", "violations": caps}
            )
        violations = check_invariants(req)
        if violations:
            return JSONResponse(
                status_code=400, content={"error": "validation", "violations": violations}
            )

        scenario_list: list[tuple[str | None, PriorsModel]]
        if req.scenarios is not None:
            scenario_list = [(s.name, s.priors) for s in req.scenarios]
        else:
            scenario_list = [(None, req.priors)]

        results = []
        try:
            for name, priors in scenario_list:
                seed = req.mc.seed if req.mc.seed is not None else secrets.randbits(32)
                spec = EstimateSpec(
                    survey=SurveyCounts(k=req.survey.k, n=req.survey.n),
                    calibration=CalibrationCounts(
                        k_u=req.calibration.k_u,
                        n_u=req.calibration.n_u,
                        k_v=req.calibration.k_v,
                        n_v=req.calibration.n_v,
                    ),
                    priors=PriorSet(
                        prior_u=ShapePair(priors.u.a, priors.u.b),
                        prior_v=ShapePair(priors.v.a, priors.v.b),
                    ),
                    mc=McConfig(
                        n_samples=req.mc.n_samples,
                        grid_m=req.mc.grid_m,
                        seed=seed,
                        max_rejection_iters=req.mc.max_rejection_iters,
                    ),
                    level=req.level,
                    reweight_factor=req.reweight,
                    population=req.population,
                    use_quadrature=req.oracle,
                )
                results.append(scenario_payload(name, spec, run_estimate(spec)))
        except ComputationError as exc:
            kind = {
                VanishingMassError: "vanishing_mass",
                RejectionBudgetError: "rejection_budget",
                SupportOverflowError: "support_overflow",
                DegenerateTestError: "degenerate_test",
            }.get(type(exc), "computation")
            return JSONResponse(
                status_code=422, content={"error": kind, "message": str(exc)}
            )
        return {"scenarios": results}

    return app


app = create_app()


def main(argv=None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(prog="prevalence-service")
    parser.add_argument("--host", default=os.environ.get("PREVALENCE_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("PREVALENCE_PORT", "8000")))
    args = parser.parse_args(argv)
    uvicorn.run("prevalence.service:app", host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    main()
