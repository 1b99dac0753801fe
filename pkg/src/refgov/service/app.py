"""FastAPI application exposing the governor over HTTP.

All heavy inputs arrive as the same JSON document the config files use;
endpoints merge it over the default preset, run the requested operation,
and return plain-JSON summaries. Errors map to typed payloads: config
and domain problems are 400s, a missing backend is a 503.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, backend_gpu
from ..config import load_config
from ..disturbance import derive_seed, sample_scenarios
from ..errors import (
    BackendUnavailableError,
    ConfigError,
    DomainError,
    InfeasibleError,
    RefgovError,
)
from ..governor import GovernorState, robust_rg_parallel
from ..harness import bench_sweep, parse_nsim_spec, run_closed_loop
from ..oracle import run_oracle_suite
from .models import (
    BenchRequest,
    BenchResponse,
    GovernStepRequest,
    GovernStepResponse,
    HealthResponse,
    OracleRequest,
    OracleResponse,
    OracleRow,
    RunRequest,
    RunResponse,
    RunRow,
    TimingRow,
)

__all__ = ["app", "create_app"]


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def create_app() -> FastAPI:
    app = FastAPI(title="refgov", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(DomainError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc), "kind": "domain"})

    @app.exception_handler(BackendUnavailableError)
    async def _backend_error(request, exc):
        return JSONResponse(status_code=503, content={"detail": str(exc), "kind": "backend"})

    @app.exception_handler(InfeasibleError)
    async def _infeasible_error(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc), "kind": "infeasible"})

    @app.exception_handler(RefgovError)
    async def _refgov_error(request, exc):
        return JSONResponse(status_code=500, content={"detail": str(exc), "kind": "internal"})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            version=__version__,
            backends={"serial": True, "multicore": True, "gpu": backend_gpu.available()},
        )

    @app.post("/govern/step", response_model=GovernStepResponse)
    def govern_step(req: GovernStepRequest):
        setup = load_config(req.config)
        plant, g = setup.plant, setup.governor
        x = np.zeros(plant.state_dim) if req.x is None else np.asarray(req.x, dtype=np.float64)
        x = plant.validate_state(x)
        scen = sample_scenarios(
            setup.model, g.n_sim, g.j_star + 1,
            seed=derive_seed(setup.seed, "scenarios") + req.t,
        )
        res = robust_rg_parallel(
            plant, x, GovernorState(v_prev=req.v_prev), req.r, setup.cset, scen, g
        )
        return GovernStepResponse(
            kappa_opt=res.kappa_opt,
            v_applied=res.v_applied,
            feasible=res.feasible,
            diagnostics=_plain(res.diagnostics),
        )

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest):
        setup = load_config(req.config)
        rec = run_closed_loop(
            setup.plant, setup.cset, setup.model, setup.governor,
            setup.profile, setup.steps, setup.seed, governor_on=req.governor_on,
        )
        rows = [
            RunRow(t=t, r_t=r, v_t=v, y_t=y, kappa_opt=k, feasible=f, wall_us=w)
            for (t, r, v, y, k, f, w) in rec.rows
        ]
        return RunResponse(
            rows=rows,
            violations=rec.violations(setup.cset),
            aborted=rec.aborted,
            abort_reason=rec.abort_reason,
            seed=rec.seed,
            diag_rows=list(rec.diag_rows),
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest):
        setup = load_config(req.config)
        if isinstance(req.n_sim, str):
            n_vals = parse_nsim_spec(req.n_sim)
        else:
            if not req.n_sim or any(n < 1 for n in req.n_sim):
                raise ConfigError(f"n_sim list must be positive ints, got {req.n_sim}")
            n_vals = sorted(set(int(n) for n in req.n_sim))
        records = bench_sweep(
            setup.plant, setup.cset, setup.model, setup.governor,
            n_vals, req.backends, reps=req.reps, seed=req.seed,
            modes=tuple(req.modes),
        )
        rows = [
            TimingRow(
                backend=r.backend, n_sim=r.n_sim, mode=r.mode,
                mean_us=r.mean_us, min_us=r.min_us, max_us=r.max_us,
                reps=r.reps, skipped=r.skipped,
            )
            for r in records
        ]
        return BenchResponse(records=rows, skipped=sum(r.skipped for r in records))

    @app.post("/oracle", response_model=OracleResponse)
    def oracle(req: OracleRequest):
        reports = run_oracle_suite(req.suite, req.cases, req.seed, j_star=req.j_star)
        rows = [
            OracleRow(case=r.case, expected=r.expected, actual=r.actual,
                      tolerance=r.tolerance, passed=r.passed)
            for r in reports
        ]
        return OracleResponse(reports=rows, failed=sum(not r.passed for r in reports))

    return app


app = create_app()
