"""HTTP service for interactive scenario evaluation.

Holds the baseline demand and default scenario immutable in memory; the
baseline run is computed once at startup. Request handling is stateless
beyond that, so identical (config, seed) requests return identical bodies
regardless of load.
"""
from __future__ import annotations

import dataclasses
from contextlib import asynccontextmanager

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse

from . import __version__
from .ensemble import EnsembleError, EvaluationError, run_ensemble, run_single
from .indicators import KPI_NAMES, compare_scenarios
from .scenario import (
    DemandProfile,
    InvariantError,
    PolicyParams,
    ScenarioConfig,
    ScenarioError,
    SchemaError,
    load_scenario,
)

API_PREFIX = "/api/v1"


def null_policy(config: ScenarioConfig) -> ScenarioConfig:
    """The as-is day: full exemption leaves every series at its baseline."""
    policy = config.policy
    return dataclasses.replace(
        config,
        policy=PolicyParams(policy.t_start, policy.t_end, 1.0, policy.fee_by_class),
    )


def build_app(
    demand: DemandProfile,
    config: ScenarioConfig,
    max_draws: int = 1000,
    cors_origins: tuple = (),
) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        baseline = run_single(null_policy(config), demand)
        app.state.baseline = {
            "config": baseline.config.to_dict(),
            "kpis": baseline.kpis.to_dict(),
            "series": {k: v.tolist() for k, v in baseline.series().items()},
        }
        app.state.ready = True
        yield

    app = FastAPI(title="cordonsim", version=__version__, lifespan=lifespan)
    app.state.ready = False
    app.state.baseline = None
    app.state.demand = demand
    app.state.config = config
    app.state.max_draws = max_draws

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.get(API_PREFIX + "/health")
    def health():
        if not app.state.ready:
            return JSONResponse(status_code=503, content={"status": "starting", "version": __version__})
        return {"status": "ok", "version": __version__}

    @app.get(API_PREFIX + "/baseline")
    def baseline():
        if not app.state.ready:
            raise HTTPException(status_code=503, detail="baseline not computed yet")
        return app.state.baseline

    @app.post(API_PREFIX + "/evaluate")
    def evaluate(payload: dict = Body(...)):
        if not app.state.ready:
            raise HTTPException(status_code=503, detail="service starting")
        body = dict(payload)
        n_draws = body.pop("n_draws", None)
        seed = body.pop("seed", 0)
        document = body.pop("config", None) or body
        config_req = _parse_config(document)
        if n_draws is not None:
            if not isinstance(n_draws, int) or n_draws < 1:
                raise HTTPException(status_code=400, detail=[
                    {"field": "n_draws", "message": "must be an integer >= 1"}
                ])
            if n_draws > app.state.max_draws:
                raise HTTPException(
                    status_code=413,
                    detail=f"n_draws {n_draws} exceeds the cap of {app.state.max_draws}",
                )
        if not isinstance(seed, int):
            raise HTTPException(status_code=400, detail=[
                {"field": "seed", "message": "must be an integer"}
            ])
        try:
            if n_draws and n_draws > 1:
                summary = run_ensemble(config_req, app.state.demand, n_draws=n_draws, seed=seed)
                return {"config": config_req.to_dict(), "ensemble": summary.to_dict()}
            result = run_single(config_req, app.state.demand)
        except (EvaluationError, EnsembleError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return result.to_dict()

    @app.post(API_PREFIX + "/compare")
    def compare(payload=Body(...)):
        if not app.state.ready:
            raise HTTPException(status_code=503, detail="service starting")
        entries = payload.get("scenarios") if isinstance(payload, dict) else payload
        if not isinstance(entries, list) or not entries:
            raise HTTPException(status_code=400, detail="provide a non-empty list of named configs")
        if len(entries) > 10:
            raise HTTPException(status_code=400, detail="at most 10 configs per comparison")
        names = [e.get("name") if isinstance(e, dict) else None for e in entries]
        if any(not isinstance(n, str) or not n for n in names):
            raise HTTPException(status_code=400, detail="every entry needs a non-empty name")
        if len(set(names)) != len(names):
            raise HTTPException(status_code=400, detail="duplicate scenario names")

        blocks = []
        out = []
        for entry in entries:
            name = entry["name"]
            try:
                config_req = _parse_config(entry.get("config"))
                result = run_single(config_req, app.state.demand)
            except HTTPException as exc:
                out.append({"name": name, "error": {"status": exc.status_code, "detail": exc.detail}})
                continue
            except (EvaluationError, EnsembleError) as exc:
                out.append({"name": name, "error": {"status": 422, "detail": str(exc)}})
                continue
            out.append({"name": name, "kpis": result.kpis.to_dict()})
            blocks.append((name, result.kpis))

        pairwise = []
        if len(blocks) >= 2:
            comparison = compare_scenarios(blocks)
            pairwise = comparison.to_dict()["pairwise"]
        return {"scenarios": out, "pairwise": pairwise}

    return app


def _parse_config(document) -> ScenarioConfig:
    if not isinstance(document, dict):
        raise HTTPException(status_code=400, detail=[
            {"field": "config", "message": "scenario config object required"}
        ])
    try:
        return load_scenario(document)
    except InvariantError as exc:
        raise HTTPException(status_code=422, detail=[
            {"field": exc.field, "message": str(exc)}
        ]) from exc
    except SchemaError as exc:
        raise HTTPException(status_code=400, detail=[
            {"field": exc.field, "message": str(exc)}
        ]) from exc
    except ScenarioError as exc:
        raise HTTPException(status_code=400, detail=[
            {"field": exc.field, "message": str(exc)}
        ]) from exc
