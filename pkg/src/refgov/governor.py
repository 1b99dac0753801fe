"""Setpoint governors: bisection, sequential scenario-robust, and grid search.

All three governors answer the same question each timestep: how far can the
applied setpoint move from v_prev toward the request r_t, as a fraction
kappa in [0, 1], without any predicted output leaving its bounds over the
next j_star steps and without the steady state leaving the tightened set?

* :func:`bisection_rg` brackets the largest feasible kappa on the nominal
  (disturbance-free) prediction.
* :func:`robust_rg_sequential` runs the bisection once per disturbance
  scenario and keeps the worst case.
* :func:`robust_rg_parallel` grids [0, 1] into m_grid candidates, fills a
  feasibility matrix over (candidate, scenario) cells with a serial,
  multicore, or GPU backend, and picks the best all-feasible row.

The grid path evaluates the steady-state test once per row (it does not
depend on the scenario) and collapses duplicate candidate setpoints before
simulating; both shortcuts leave the resulting matrix exactly as if every
cell had been evaluated directly.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constraints import ConstraintSet, tighten, tighten_margin, validate_epsilon
from .disturbance import ScenarioSet
from .dynamics import Plant
from .errors import BackendUnavailableError, ConfigError, DomainError, InfeasibleError

__all__ = [
    "BACKENDS",
    "GovernorConfig",
    "GovernorState",
    "KappaResult",
    "update_setpoint",
    "grid_kappas",
    "check_candidate",
    "probe_candidate",
    "bisection_rg",
    "robust_rg_sequential",
    "robust_rg_parallel",
    "fill_feasibility",
    "extract_kappa_opt",
    "DIAG_CSV_HEADER",
]

BACKENDS = ("serial", "multicore", "gpu")
_POLICIES = ("hold", "error")


@dataclass
class GovernorConfig:
    """Tuning knobs shared by the governor algorithms.

    j_star: prediction horizon in steps. epsilon: steady-state tightening
    factor in (0, 1), or an absolute margin when tighten_mode is "margin".
    n_kappa: bisection refinement count. m_grid: kappa grid size M >= 2.
    n_sim: scenario count. backend: where the grid fill runs.
    infeasible_policy: what to do when not even kappa=0 is feasible.
    prefix_mode: restrict the grid optimum to the contiguous feasible
    prefix. workers: multicore partition count (None = all cores).
    """

    j_star: int = 256
    epsilon: float = 0.05
    n_kappa: int = 8
    m_grid: int = 32
    n_sim: int = 64
    backend: str = "serial"
    infeasible_policy: str = "hold"
    prefix_mode: bool = False
    workers: int | None = None
    tighten_mode: str = "scale"

    def __post_init__(self):
        if self.j_star < 1:
            raise ConfigError(f"j_star must be >= 1, got {self.j_star}")
        if self.tighten_mode == "scale":
            validate_epsilon(self.epsilon)
        elif self.tighten_mode == "margin":
            if not (np.isfinite(self.epsilon) and self.epsilon > 0):
                raise ConfigError(
                    f"margin tightening needs epsilon > 0, got {self.epsilon}"
                )
        else:
            raise ConfigError(
                f"tighten_mode must be scale or margin, got {self.tighten_mode!r}"
            )
        if self.n_kappa < 1:
            raise ConfigError(f"n_kappa must be >= 1, got {self.n_kappa}")
        if self.m_grid < 2:
            raise ConfigError(f"m_grid must be >= 2, got {self.m_grid}")
        if self.n_sim < 1:
            raise ConfigError(f"n_sim must be >= 1, got {self.n_sim}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.infeasible_policy not in _POLICIES:
            raise ConfigError(
                f"infeasible_policy must be one of {_POLICIES}, got {self.infeasible_policy!r}"
            )
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be >= 1 or None, got {self.workers}")


@dataclass
class GovernorState:
    """Carries the last applied setpoint between timesteps."""

    v_prev: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.v_prev):
            raise ConfigError(f"v_prev must be finite, got {self.v_prev}")


@dataclass
class KappaResult:
    """Outcome of one governor call."""

    kappa_opt: float
    v_applied: float
    feasible: bool
    diagnostics: dict = field(default_factory=dict)
    matrix: np.ndarray | None = None

    def diagnostics_csv_row(self, t: int) -> str:
        d = self.diagnostics
        return (
            f"{t},{self.kappa_opt!r},{self.v_applied!r},{int(self.feasible)},"
            f"{d.get('sims_run', 0)},{d.get('early_terms', 0)},{d.get('wall_us', 0)}"
        )


DIAG_CSV_HEADER = "t,kappa_opt,v,feasible,sims_run,early_terms,wall_us"


def _tightened(cset: ConstraintSet, eps: float, mode: str = "scale") -> ConstraintSet:
    if mode == "scale":
        return tighten(cset, eps)
    if mode == "margin":
        return tighten_margin(cset, eps)
    raise ConfigError(f"tighten_mode must be scale or margin, got {mode!r}")


def update_setpoint(v_prev: float, r: float, kappa: float) -> float:
    """Convex step v_prev + kappa*(r - v_prev), exact at both endpoints."""
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa must lie in [0, 1], got {kappa}")
    if kappa == 0.0:
        return float(v_prev)
    if kappa == 1.0:
        return float(r)
    return float(v_prev + kappa * (r - v_prev))


def grid_kappas(m_grid: int) -> np.ndarray:
    """The ascending kappa grid {i/(M-1) : i = 0..M-1}, endpoints exact."""
    if m_grid < 2:
        raise ConfigError(f"m_grid must be >= 2, got {m_grid}")
    return np.arange(m_grid, dtype=np.float64) / (m_grid - 1)


def _scenario_tensor(scenarios, state_dim: int, j_star: int) -> np.ndarray:
    data = scenarios.data if isinstance(scenarios, ScenarioSet) else np.asarray(scenarios)
    if data.ndim != 3 or data.shape[2] != state_dim:
        raise ConfigError(
            f"scenarios must be (n_sim, horizon, {state_dim}), got {data.shape}"
        )
    if data.shape[1] < j_star + 1:
        raise ConfigError(
            f"scenario horizon {data.shape[1]} too short: need >= j_star+1 = {j_star + 1}"
        )
    return np.ascontiguousarray(data, dtype=np.float64)


@dataclass(frozen=True)
class CellProbe:
    """Detail record for one candidate check (see :func:`probe_candidate`)."""

    ok: bool
    steady_state_ok: bool
    status: int
    steps_run: int
    violation_step: int | None


def probe_candidate(
    plant: Plant,
    x0: np.ndarray,
    v: float,
    scenario: np.ndarray,
    cset: ConstraintSet,
    eps: float,
    j_star: int,
    tighten_mode: str = "scale",
) -> CellProbe:
    """check_candidate with diagnostics: where and how the check ended."""
    x0 = plant.validate_state(x0)
    scenario = np.asarray(scenario, dtype=np.float64)
    if scenario.ndim != 2 or scenario.shape[1] != plant.state_dim:
        raise ConfigError(
            f"scenario must be 2-D with {plant.state_dim} columns, got {scenario.shape}"
        )
    if scenario.shape[0] < j_star + 1:
        raise ConfigError(
            f"scenario length {scenario.shape[0]} too short: need >= {j_star + 1}"
        )
    tight = _tightened(cset, eps, tighten_mode)
    ss_ok = tight.contains(plant.steady_state_output(v))
    if not ss_ok:
        return CellProbe(False, False, kernels.CELL_VIOLATED, 0, None)
    status, steps_run = kernels.rollout_cell(
        plant, x0, v, scenario, j_star, cset.lower, cset.upper
    )
    ok = status == kernels.CELL_OK
    return CellProbe(ok, True, int(status), int(steps_run), None if ok else int(steps_run))


def check_candidate(
    plant: Plant,
    x0: np.ndarray,
    v: float,
    scenario: np.ndarray,
    cset: ConstraintSet,
    eps: float,
    j_star: int,
    tighten_mode: str = "scale",
) -> bool:
    """True iff v keeps every predicted output in bounds over j_star steps
    and the steady state inside the tightened set, under one disturbance
    scenario. Propagation overflow counts as infeasible."""
    return probe_candidate(plant, x0, v, scenario, cset, eps, j_star, tighten_mode).ok


def _resolve_workers(workers: int | None) -> int:
    return int(workers) if workers else (os.cpu_count() or 1)


def fill_feasibility(
    backend: str,
    plant: Plant,
    x0: np.ndarray,
    v_prev: float,
    r_t: float,
    grid: np.ndarray,
    scenarios,
    cset: ConstraintSet,
    eps: float,
    j_star: int,
    workers: int | None = None,
    stats: dict | None = None,
    tighten_mode: str = "scale",
) -> np.ndarray:
    """Fill the (len(grid), n_sim) boolean feasibility matrix P.

    P[i, k] answers check_candidate for candidate kappa grid[i] against
    scenario k. The serial backend iterates row-major on one thread; the
    multicore backend hands disjoint slices of the cell space to `workers`
    workers; the gpu backend delegates to an external device runner. Pass a
    dict as `stats` to receive per-call counters.
    """
    if backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}, got {backend!r}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 1:
        raise ConfigError(f"grid must be a nonempty 1-D array, got shape {grid.shape}")
    if np.any(np.diff(grid) < 0):
        raise ConfigError("grid must be sorted ascending")
    if np.any((grid < 0.0) | (grid > 1.0)) or not np.all(np.isfinite(grid)):
        raise ConfigError("grid entries must lie in [0, 1]")
    x0 = plant.validate_state(x0)
    if tighten_mode == "scale":
        validate_epsilon(eps)
    if j_star < 1:
        raise ConfigError(f"j_star must be >= 1, got {j_star}")
    dist = _scenario_tensor(scenarios, plant.state_dim, j_star)

    m_grid = grid.size
    n_sim = dist.shape[0]
    v_rows = np.array([update_setpoint(v_prev, r_t, float(k)) for k in grid])
    tight = _tightened(cset, eps, tighten_mode)

    t0 = time.perf_counter()
    if backend == "gpu":
        from . import backend_gpu

        P, gpu_stats = backend_gpu.fill(
            plant, x0, v_rows, dist, j_star, cset, tight
        )
        if stats is not None:
            stats.update(gpu_stats)
            stats["backend"] = "gpu"
            stats["wall_us"] = int((time.perf_counter() - t0) * 1e6)
        return P

    ss_ok = np.array([tight.contains(plant.steady_state_output(v)) for v in v_rows])

    # Duplicate candidate setpoints (common once v has converged onto r)
    # share one simulated row; the copy is exact, not an approximation.
    rep_for: dict[float, int] = {}
    reps = []
    dup_src = np.full(m_grid, -1, dtype=np.int64)
    for i in range(m_grid):
        if not ss_ok[i]:
            continue
        v = float(v_rows[i])
        if v in rep_for:
            dup_src[i] = rep_for[v]
        else:
            rep_for[v] = i
            reps.append(i)

    S = np.zeros((m_grid, n_sim), dtype=np.uint8)
    steps = np.zeros((m_grid, n_sim), dtype=np.int32)
    rows = np.array(reps, dtype=np.int64)
    w = 1 if backend == "serial" else _resolve_workers(workers)
    kernels.run_cells(
        plant, x0, v_rows, rows, dist, j_star, cset.lower, cset.upper,
        S, steps,
        mode="serial" if backend == "serial" else "parallel",
        workers=w,
    )
    for i in range(m_grid):
        src = dup_src[i]
        if src >= 0:
            S[i, :] = S[src, :]
            steps[i, :] = steps[src, :]

    P = (S == kernels.CELL_OK) & ss_ok[:, None]
    if stats is not None:
        evaluated = steps[rows, :] if rows.size else steps[:0, :]
        stats.update(
            backend=backend,
            workers=w,
            sims_run=int(rows.size * n_sim),
            early_terms=int(np.count_nonzero(evaluated < j_star)),
            overflows=int(np.count_nonzero(S[rows, :] == kernels.CELL_OVERFLOW)) if rows.size else 0,
            ss_pruned_rows=int(np.count_nonzero(~ss_ok)),
            dedup_rows=int(np.count_nonzero(dup_src >= 0)),
            wall_us=int((time.perf_counter() - t0) * 1e6),
        )
    return P


def extract_kappa_opt(
    P: np.ndarray, prefix_mode: bool = False
) -> tuple[int | None, float | None]:
    """Best all-feasible row of P: (1-based row index i*, kappa=(i*-1)/(M-1)).

    The default takes the literal maximum all-ones row even when feasibility
    is non-contiguous; prefix_mode stops at the first infeasible row and is
    the conservative variant. Returns (None, None) when no row qualifies.
    """
    P = np.asarray(P)
    if P.ndim != 2 or P.size == 0:
        raise ConfigError(f"P must be a nonempty 2-D matrix, got shape {P.shape}")
    m_grid = P.shape[0]
    full = P.all(axis=1)
    if prefix_mode:
        idx = -1
        for i in range(m_grid):
            if not full[i]:
                break
            idx = i
    else:
        idx = int(np.max(np.nonzero(full)[0])) if full.any() else -1
    if idx < 0:
        return None, None
    if m_grid == 1:
        return 1, 1.0
    return idx + 1, idx / (m_grid - 1)


def _bisect_kappa(
    plant: Plant,
    x0: np.ndarray,
    v_prev: float,
    r_t: float,
    cset: ConstraintSet,
    eps: float,
    j_star: int,
    n_kappa: int,
    dist: np.ndarray,
    tight: ConstraintSet,
) -> tuple[float, bool, int, int]:
    """Largest feasible kappa by bracketing; returns (kappa, feasible, cells, early).

    Probes the full step kappa=1 first (feasible short-circuits), then runs
    n_kappa midpoint refinements, so the bracket width ends at 0.5**n_kappa
    and the returned kappa never exceeds the true threshold.
    """

    def feasible_at(kappa: float) -> tuple[bool, int]:
        v = update_setpoint(v_prev, r_t, kappa)
        if not tight.contains(plant.steady_state_output(v)):
            return False, 0
        status, steps_run = kernels.rollout_cell(
            plant, x0, v, dist, j_star, cset.lower, cset.upper
        )
        return status == kernels.CELL_OK, steps_run

    cells = 1
    early = 0
    ok, steps_run = feasible_at(1.0)
    if steps_run < j_star and not ok:
        early += 1
    if ok:
        return 1.0, True, cells, early
    kappa_lo, kappa_hi = 0.0, 1.0
    kappa_opt = 0.0
    found = False
    for _ in range(n_kappa):
        kappa = 0.5 * (kappa_lo + kappa_hi)
        ok, steps_run = feasible_at(kappa)
        cells += 1
        if steps_run < j_star and not ok:
            early += 1
        if ok:
            kappa_opt = kappa
            found = True
            kappa_lo = kappa
        else:
            kappa_hi = kappa
    return kappa_opt, found, cells, early


def bisection_rg(
    plant: Plant,
    x_t: np.ndarray,
    state: GovernorState,
    r_t: float,
    cset: ConstraintSet,
    config: GovernorConfig,
) -> KappaResult:
    """Disturbance-free governor step by bisection on kappa.

    kappa_opt = 0 (hold v_prev) is the conservative fallback when no tested
    candidate is feasible.
    """
    x_t = plant.validate_state(x_t)
    t0 = time.perf_counter()
    dist = np.zeros((config.j_star + 1, plant.state_dim))
    tight = _tightened(cset, config.epsilon, config.tighten_mode)
    kappa_opt, found, cells, early = _bisect_kappa(
        plant, x_t, state.v_prev, r_t, cset, config.epsilon,
        config.j_star, config.n_kappa, dist, tight,
    )
    v = update_setpoint(state.v_prev, r_t, kappa_opt)
    state.v_prev = v
    return KappaResult(
        kappa_opt=kappa_opt,
        v_applied=v,
        feasible=found,
        diagnostics={
            "method": "bisection",
            "sims_run": cells,
            "early_terms": early,
            "wall_us": int((time.perf_counter() - t0) * 1e6),
        },
    )


def robust_rg_sequential(
    plant: Plant,
    x_t: np.ndarray,
    state: GovernorState,
    r_t: float,
    cset: ConstraintSet,
    scenarios: ScenarioSet,
    config: GovernorConfig,
) -> KappaResult:
    """Scenario-robust governor step: worst-case bisection over scenarios.

    Each scenario keeps its disturbance realization fixed across its own
    bisection iterations; the returned kappa is the minimum across
    scenarios.
    """
    x_t = plant.validate_state(x_t)
    if scenarios.n_sim != config.n_sim:
        raise ConfigError(
            f"scenario count {scenarios.n_sim} does not match config.n_sim {config.n_sim}"
        )
    dist = _scenario_tensor(scenarios, plant.state_dim, config.j_star)
    tight = _tightened(cset, config.epsilon, config.tighten_mode)
    t0 = time.perf_counter()
    kappa_opt = 1.0
    feasible = True
    cells = 0
    early = 0
    for k in range(dist.shape[0]):
        kappa_k, found_k, cells_k, early_k = _bisect_kappa(
            plant, x_t, state.v_prev, r_t, cset, config.epsilon,
            config.j_star, config.n_kappa, dist[k], tight,
        )
        cells += cells_k
        early += early_k
        feasible = feasible and found_k
        kappa_opt = min(kappa_opt, kappa_k)
    v = update_setpoint(state.v_prev, r_t, kappa_opt)
    state.v_prev = v
    return KappaResult(
        kappa_opt=kappa_opt,
        v_applied=v,
        feasible=feasible,
        diagnostics={
            "method": "sequential",
            "sims_run": cells,
            "early_terms": early,
            "wall_us": int((time.perf_counter() - t0) * 1e6),
        },
    )


def robust_rg_parallel(
    plant: Plant,
    x_t: np.ndarray,
    state: GovernorState,
    r_t: float,
    cset: ConstraintSet,
    scenarios: ScenarioSet,
    config: GovernorConfig,
    backend: str | None = None,
) -> KappaResult:
    """Scenario-robust governor step by grid search over kappa candidates.

    Fills the feasibility matrix with the selected backend, takes the best
    all-feasible row, applies the resulting setpoint, and advances
    state.v_prev. When not even holding v_prev is feasible the configured
    infeasible_policy decides between holding anyway (feasible=False) and
    raising.
    """
    x_t = plant.validate_state(x_t)
    backend = backend or config.backend
    grid = grid_kappas(config.m_grid)
    stats: dict = {}
    t0 = time.perf_counter()
    try:
        P = fill_feasibility(
            backend, plant, x_t, state.v_prev, r_t, grid, scenarios,
            cset, config.epsilon, config.j_star, workers=config.workers, stats=stats,
            tighten_mode=config.tighten_mode,
        )
    except BackendUnavailableError:
        if backend != "gpu":
            raise
        # No device runner configured: degrade to the multicore CPU path.
        P = fill_feasibility(
            "multicore", plant, x_t, state.v_prev, r_t, grid, scenarios,
            cset, config.epsilon, config.j_star, workers=config.workers, stats=stats,
            tighten_mode=config.tighten_mode,
        )
        stats["backend"] = "multicore(fallback)"
    row, kappa = extract_kappa_opt(P, prefix_mode=config.prefix_mode)
    stats["wall_us"] = int((time.perf_counter() - t0) * 1e6)
    stats["method"] = "parallel-grid"
    if row is None:
        if config.infeasible_policy == "error":
            raise InfeasibleError(
                "no candidate feasible, including kappa=0 (hold current setpoint)"
            )
        return KappaResult(
            kappa_opt=0.0,
            v_applied=state.v_prev,
            feasible=False,
            diagnostics=stats,
            matrix=P,
        )
    kappa = float(grid[row - 1])
    v = update_setpoint(state.v_prev, r_t, kappa)
    state.v_prev = v
    return KappaResult(
        kappa_opt=kappa, v_applied=v, feasible=True, diagnostics=stats, matrix=P
    )
