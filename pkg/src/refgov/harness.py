"""Closed-loop simulation driver and runtime benchmark sweep.

The driver plays a piecewise-constant reference profile against a plant,
letting the governor shape the applied setpoint each step while the plant
is pushed by its own independently drawn disturbance stream. The benchmark
sweep times governor calls on a frozen snapshot across scenario counts and
backends, in two modes: kernel-only (scenario tensors presampled) and
end-to-end (sampling included), applied uniformly to every backend.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSet
from .disturbance import (
    DisturbanceModel,
    ScenarioSet,
    _uniform_grid,
    derive_seed,
    sample_scenarios,
)
from .dynamics import Plant
from .errors import BackendUnavailableError, ConfigError, IntegrationOverflowError
from .governor import (
    GovernorConfig,
    GovernorState,
    KappaResult,
    robust_rg_parallel,
)
from .kernels import STATE_LIMIT

__all__ = [
    "ReferenceProfile",
    "RunRecord",
    "TimingRecord",
    "run_closed_loop",
    "bench_sweep",
    "emit_csv",
    "parse_nsim_spec",
    "RUN_CSV_HEADER",
    "TIMING_CSV_HEADER",
]

RUN_CSV_HEADER = "t,r_t,v_t,y_t,kappa_opt,feasible,wall_us"
TIMING_CSV_HEADER = "backend,n_sim,mode,mean_us,min_us,max_us,reps"


@dataclass(frozen=True)
class ReferenceProfile:
    """Piecewise-constant reference: list of (t_start, r), first at t=0."""

    points: tuple

    def __post_init__(self):
        try:
            pts = tuple((int(t), float(r)) for t, r in self.points)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"profile points must be (t_start, r) pairs: {e}") from None
        if not pts:
            raise ConfigError("profile needs at least one (t_start, r) point")
        if pts[0][0] != 0:
            raise ConfigError(f"first profile point must start at t=0, got {pts[0][0]}")
        starts = [t for t, _ in pts]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError(f"profile t_start values must be strictly increasing: {starts}")
        object.__setattr__(self, "points", pts)

    def value_at(self, t: int) -> float:
        r = self.points[0][1]
        for t_start, r_next in self.points:
            if t_start > t:
                break
            r = r_next
        return r

    def schedule(self, steps: int) -> np.ndarray:
        out = np.empty(steps)
        idx = 0
        r = self.points[0][1]
        for t in range(steps):
            while idx < len(self.points) and self.points[idx][0] <= t:
                r = self.points[idx][1]
                idx += 1
            out[t] = r
        return out


@dataclass
class RunRecord:
    """Per-timestep trace of one closed-loop run plus its provenance."""

    rows: list
    config: dict
    seed: int
    aborted: bool = False
    abort_reason: str | None = None
    diag_rows: list = field(default_factory=list)

    def violations(self, cset: ConstraintSet) -> int:
        return sum(1 for row in self.rows if not cset.contains(row[3]))

    def column(self, name: str) -> np.ndarray:
        names = RUN_CSV_HEADER.split(",")
        if name not in names:
            raise ConfigError(f"unknown run column {name!r}; known: {names}")
        i = names.index(name)
        return np.array([row[i] for row in self.rows])


@dataclass(frozen=True)
class TimingRecord:
    """One benchmark cell: a (backend, n_sim, mode) timing summary."""

    backend: str
    n_sim: int
    m_grid: int
    reps: int
    mode: str
    mean_us: float | None
    min_us: float | None
    max_us: float | None
    skipped: bool = False

    def __post_init__(self):
        if not self.skipped:
            if self.reps < 1:
                raise ConfigError(f"reps must be >= 1, got {self.reps}")
            if not (self.min_us <= self.mean_us <= self.max_us):
                raise ConfigError(
                    f"mean {self.mean_us} outside [min {self.min_us}, max {self.max_us}]"
                )


def run_closed_loop(
    plant: Plant,
    cset: ConstraintSet,
    model: DisturbanceModel,
    config: GovernorConfig,
    profile: ReferenceProfile,
    steps: int,
    seed: int,
    governor_on: bool = True,
    x0: np.ndarray | None = None,
    v0: float = 0.0,
) -> RunRecord:
    """Simulate `steps` timesteps of the governed (or raw) closed loop.

    Each step draws a fresh prediction scenario set whose seed advances
    with the timestep, calls the grid governor for the setpoint (or passes
    the reference straight through with the governor off), then advances
    the true plant under an independently keyed disturbance realization.
    Integration overflow aborts and returns the partial record.
    """
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if model.state_dim != plant.state_dim:
        raise ConfigError(
            f"disturbance model has {model.state_dim} states, plant has {plant.state_dim}"
        )
    x = plant.validate_state(
        np.zeros(plant.state_dim) if x0 is None else np.asarray(x0, dtype=np.float64)
    )
    state = GovernorState(v_prev=float(v0))
    scen_seed = derive_seed(seed, "scenarios")
    plant_seed = derive_seed(seed, "plant")

    # Realized disturbances, one row per step, from their own stream.
    lo = np.array([a for a, _ in model.ranges])
    span = np.array([b - a for a, b in model.ranges])
    d_true = lo + span * _uniform_grid(plant_seed, 1, steps, model.state_dim)[0]

    r_sched = profile.schedule(steps)
    rows = []
    diag_rows = []
    snapshot = {
        "plant": type(plant).__name__,
        "governor_on": governor_on,
        "j_star": config.j_star,
        "epsilon": config.epsilon,
        "m_grid": config.m_grid,
        "n_sim": config.n_sim,
        "backend": config.backend,
        "steps": steps,
        "constraint": [cset.lower, cset.upper, cset.anchor],
        "ranges": list(model.ranges),
    }
    record = RunRecord(rows=rows, config=snapshot, seed=seed, diag_rows=diag_rows)

    for t in range(steps):
        r_t = float(r_sched[t])
        if governor_on:
            scen = sample_scenarios(
                model, config.n_sim, config.j_star + 1, seed=scen_seed + t
            )
            t0 = time.perf_counter()
            res = robust_rg_parallel(plant, x, state, r_t, cset, scen, config)
            wall_us = int((time.perf_counter() - t0) * 1e6)
            v_t = res.v_applied
            kappa = res.kappa_opt
            feasible = res.feasible
            diag_rows.append(res.diagnostics_csv_row(t))
        else:
            v_t = r_t
            state.v_prev = v_t
            kappa = 1.0
            feasible = True
            wall_us = 0
        y_t = plant.output(x, v_t)
        rows.append((t, r_t, v_t, float(y_t), float(kappa), bool(feasible), wall_us))
        try:
            x = plant.step(x, v_t) + d_true[t]
        except IntegrationOverflowError as e:
            record.aborted = True
            record.abort_reason = f"step {t}: {e}"
            return record
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > STATE_LIMIT):
            record.aborted = True
            record.abort_reason = f"step {t}: state left the operating box"
            return record
    return record


def parse_nsim_spec(spec: str) -> list[int]:
    """Parse a scenario-count sweep like "1:32:1,32:8192:32" or "64,128".

    Ranges are inclusive start:stop:step; results are deduplicated and
    sorted ascending.
    """
    values: set[int] = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        try:
            if len(pieces) == 1:
                values.add(int(pieces[0]))
            elif len(pieces) == 3:
                start, stop, step = (int(p) for p in pieces)
                if step < 1 or start < 1 or stop < start:
                    raise ValueError(f"bad range {part!r}")
                values.update(range(start, stop + 1, step))
            else:
                raise ValueError(f"bad range {part!r}")
        except ValueError as e:
            raise ConfigError(f"cannot parse n_sim spec {spec!r}: {e}") from None
    if not values or min(values) < 1:
        raise ConfigError(f"n_sim spec {spec!r} must produce positive counts")
    return sorted(values)


_BENCH_MODES = ("kernel-only", "end-to-end")


def bench_sweep(
    plant: Plant,
    cset: ConstraintSet,
    model: DisturbanceModel,
    template: GovernorConfig,
    n_sim_values: list[int],
    backends: list[str],
    reps: int = 20,
    seed: int = 7,
    modes: tuple = _BENCH_MODES,
    x0: np.ndarray | None = None,
    v_prev: float = 0.0,
    r: float = 0.5,
) -> list[TimingRecord]:
    """Time governor calls over (backend, n_sim) cells on a frozen snapshot.

    Per cell: one untimed warmup call, then `reps` timed calls. kernel-only
    presamples the scenario tensor so only the governor call is inside the
    clock; end-to-end samples a fresh tensor inside the clock as well. The
    snapshot keeps every grid candidate active so the measured work is the
    full matrix fill. Unavailable backends yield skipped records.
    """
    if not n_sim_values or not backends:
        raise ConfigError("n_sim_values and backends must be nonempty")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    for mode in modes:
        if mode not in _BENCH_MODES:
            raise ConfigError(f"unknown timing mode {mode!r}; known: {_BENCH_MODES}")
    x0 = plant.validate_state(
        np.zeros(plant.state_dim) if x0 is None else np.asarray(x0, dtype=np.float64)
    )

    records: list[TimingRecord] = []
    for backend in backends:
        for n_sim in n_sim_values:
            cfg = GovernorConfig(
                j_star=template.j_star,
                epsilon=template.epsilon,
                n_kappa=template.n_kappa,
                m_grid=template.m_grid,
                n_sim=n_sim,
                backend=backend,
                infeasible_policy=template.infeasible_policy,
                prefix_mode=template.prefix_mode,
                workers=template.workers,
                tighten_mode=template.tighten_mode,
            )
            cell_seed = derive_seed(seed, f"bench:{backend}:{n_sim}")
            scen = sample_scenarios(model, n_sim, cfg.j_star + 1, seed=cell_seed)
            for mode in modes:
                try:
                    times = _time_cell(plant, cset, model, cfg, scen, reps, mode,
                                       cell_seed, x0, v_prev, r)
                except BackendUnavailableError:
                    records.append(
                        TimingRecord(backend, n_sim, cfg.m_grid, reps, mode,
                                     None, None, None, skipped=True)
                    )
                    continue
                records.append(
                    TimingRecord(
                        backend, n_sim, cfg.m_grid, reps, mode,
                        mean_us=float(np.mean(times)),
                        min_us=float(np.min(times)),
                        max_us=float(np.max(times)),
                    )
                )
    return records


def _time_cell(plant, cset, model, cfg, scen, reps, mode, cell_seed, x0, v_prev, r):
    from . import backend_gpu

    if cfg.backend == "gpu" and not backend_gpu.available():
        raise BackendUnavailableError("no gpu runner configured")

    def one_call(scenarios) -> KappaResult:
        # Fresh state per call: the snapshot must not drift between reps.
        return robust_rg_parallel(
            plant, x0, GovernorState(v_prev), r, cset, scenarios, cfg
        )

    one_call(scen)  # warmup: JIT compilation and caches stay out of the clock
    times = np.empty(reps)
    for i in range(reps):
        if mode == "end-to-end":
            t0 = time.perf_counter()
            fresh = sample_scenarios(model, cfg.n_sim, cfg.j_star + 1,
                                     seed=cell_seed + i + 1)
            one_call(fresh)
            times[i] = (time.perf_counter() - t0) * 1e6
        else:
            t0 = time.perf_counter()
            one_call(scen)
            times[i] = (time.perf_counter() - t0) * 1e6
    return times


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(records, path, kind: str | None = None) -> None:
    """Write records as CSV with a fixed, documented column order.

    kind is inferred from the records when possible: a RunRecord or list of
    TimingRecord/OracleReport. Pass kind ("run" | "timing" | "oracle")
    explicitly for empty lists.
    """
    from .oracle import ORACLE_CSV_HEADER, OracleReport

    if kind is None:
        if isinstance(records, RunRecord):
            kind = "run"
        elif isinstance(records, (list, tuple)) and records:
            first = records[0]
            if isinstance(first, TimingRecord):
                kind = "timing"
            elif isinstance(first, OracleReport):
                kind = "oracle"
        if kind is None:
            raise ConfigError("cannot infer CSV schema from empty records; pass kind=")

    lines: list[str] = []
    if kind == "run":
        lines.append(RUN_CSV_HEADER)
        for row in records.rows:
            lines.append(",".join(_fmt(v) for v in row))
    elif kind == "timing":
        lines.append(TIMING_CSV_HEADER)
        for rec in records:
            lines.append(
                ",".join(
                    [rec.backend, str(rec.n_sim), rec.mode,
                     _fmt(rec.mean_us), _fmt(rec.min_us), _fmt(rec.max_us),
                     str(rec.reps)]
                )
            )
    elif kind == "oracle":
        lines.append(ORACLE_CSV_HEADER)
        for rep in records:
            lines.append(rep.csv_row())
    else:
        raise ConfigError(f"unknown CSV kind {kind!r}")
    try:
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise ConfigError(f"cannot write CSV to {path}: {e}") from None
