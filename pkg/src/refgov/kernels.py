"""Compiled batch-rollout engine behind the feasibility-matrix backends.

Each (candidate setpoint, scenario) cell is one forward simulation: roll the
plant j_star steps under a constant setpoint with that scenario's additive
disturbance, checking the output bounds after every transition and stopping
at the first violation. Cells are pure functions of their inputs, so any
partition of the cell space across workers produces the same matrix; the
parallel fills below give each worker a disjoint slice and write without
locks.

Kernels are module-level and compiled lazily with numba (cache=True keeps
compilation out of steady-state runs). The two bundled plant families get
specialized straight-line kernels; any other plant falls back to a pure
Python cell with identical semantics, partitioned across a thread pool for
the multicore mode.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit, prange

from .errors import ConfigError

__all__ = [
    "CELL_OK",
    "CELL_VIOLATED",
    "CELL_OVERFLOW",
    "STATE_LIMIT",
    "rollout_cell",
    "run_cells",
    "warmup",
]

CELL_OK = 1
CELL_VIOLATED = 0
CELL_OVERFLOW = 2

# States beyond this magnitude abort the rollout; mirrors dynamics.STATE_ABORT_LIMIT.
STATE_LIMIT = 1e6


# One cell for the three-state tanh surrogate, RK4-discretized inline.
# Scalarized on purpose: no array traffic in the hot loop.
@njit(cache=True, nogil=True)
def _cell_sfc(h, x0, v, dist, n_steps, lo, hi):
    x1 = x0[0]
    x2 = x0[1]
    x3 = x0[2]
    if not (lo <= x1 <= hi):
        return CELL_VIOLATED, 0
    c = h / 6.0
    for j in range(n_steps):
        k11 = -x1 + np.tanh(x2)
        k12 = -x2 + v
        k13 = -2.0 * x3 + x1
        a1 = x1 + 0.5 * h * k11
        a2 = x2 + 0.5 * h * k12
        a3 = x3 + 0.5 * h * k13
        k21 = -a1 + np.tanh(a2)
        k22 = -a2 + v
        k23 = -2.0 * a3 + a1
        b1 = x1 + 0.5 * h * k21
        b2 = x2 + 0.5 * h * k22
        b3 = x3 + 0.5 * h * k23
        k31 = -b1 + np.tanh(b2)
        k32 = -b2 + v
        k33 = -2.0 * b3 + b1
        c1 = x1 + h * k31
        c2 = x2 + h * k32
        c3 = x3 + h * k33
        k41 = -c1 + np.tanh(c2)
        k42 = -c2 + v
        k43 = -2.0 * c3 + c1
        x1 = x1 + c * (k11 + 2.0 * k21 + 2.0 * k31 + k41) + dist[j, 0]
        x2 = x2 + c * (k12 + 2.0 * k22 + 2.0 * k32 + k42) + dist[j, 1]
        x3 = x3 + c * (k13 + 2.0 * k23 + 2.0 * k33 + k43) + dist[j, 2]
        if not (
            abs(x1) <= STATE_LIMIT and abs(x2) <= STATE_LIMIT and abs(x3) <= STATE_LIMIT
        ):
            return CELL_OVERFLOW, j + 1
        if not (lo <= x1 <= hi):
            return CELL_VIOLATED, j + 1
    return CELL_OK, n_steps


# One cell for x+ = A x + B v, y = C x + D v, any state dimension.
@njit(cache=True, nogil=True)
def _cell_lin(A, B, C, D, x0, v, dist, n_steps, lo, hi):
    n = x0.shape[0]
    x = x0.copy()
    xn = np.empty(n, dtype=np.float64)
    y = D * v
    for l in range(n):
        y += C[l] * x[l]
    if not (lo <= y <= hi):
        return CELL_VIOLATED, 0
    for j in range(n_steps):
        for i in range(n):
            s = B[i] * v
            for l in range(n):
                s += A[i, l] * x[l]
            xn[i] = s + dist[j, i]
        ok = True
        for i in range(n):
            x[i] = xn[i]
            if not (abs(x[i]) <= STATE_LIMIT):
                ok = False
        if not ok:
            return CELL_OVERFLOW, j + 1
        y = D * v
        for l in range(n):
            y += C[l] * x[l]
        if not (lo <= y <= hi):
            return CELL_VIOLATED, j + 1
    return CELL_OK, n_steps


@njit(cache=True, nogil=True)
def _sfc_serial(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows):
    for a in range(rows.shape[0]):
        i = rows[a]
        v = v_rows[i]
        for k in range(dist.shape[0]):
            st, sp = _cell_sfc(h, x0, v, dist[k], n_steps, lo, hi)
            S[i, k] = st
            steps[i, k] = sp


@njit(cache=True, nogil=True, parallel=True)
def _sfc_rows(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers):
    n_act = rows.shape[0]
    N = dist.shape[0]
    for w in prange(workers):
        a0 = w * n_act // workers
        a1 = (w + 1) * n_act // workers
        for a in range(a0, a1):
            i = rows[a]
            v = v_rows[i]
            for k in range(N):
                st, sp = _cell_sfc(h, x0, v, dist[k], n_steps, lo, hi)
                S[i, k] = st
                steps[i, k] = sp


@njit(cache=True, nogil=True, parallel=True)
def _sfc_cells(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers):
    n_act = rows.shape[0]
    N = dist.shape[0]
    total = n_act * N
    for w in prange(workers):
        c0 = w * total // workers
        c1 = (w + 1) * total // workers
        for c in range(c0, c1):
            a = c // N
            k = c - a * N
            i = rows[a]
            st, sp = _cell_sfc(h, x0, v_rows[i], dist[k], n_steps, lo, hi)
            S[i, k] = st
            steps[i, k] = sp


@njit(cache=True, nogil=True)
def _lin_serial(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows):
    for a in range(rows.shape[0]):
        i = rows[a]
        v = v_rows[i]
        for k in range(dist.shape[0]):
            st, sp = _cell_lin(A, B, C, D, x0, v, dist[k], n_steps, lo, hi)
            S[i, k] = st
            steps[i, k] = sp


@njit(cache=True, nogil=True, parallel=True)
def _lin_rows(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers):
    n_act = rows.shape[0]
    N = dist.shape[0]
    for w in prange(workers):
        a0 = w * n_act // workers
        a1 = (w + 1) * n_act // workers
        for a in range(a0, a1):
            i = rows[a]
            v = v_rows[i]
            for k in range(N):
                st, sp = _cell_lin(A, B, C, D, x0, v, dist[k], n_steps, lo, hi)
                S[i, k] = st
                steps[i, k] = sp


@njit(cache=True, nogil=True, parallel=True)
def _lin_cells(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers):
    n_act = rows.shape[0]
    N = dist.shape[0]
    total = n_act * N
    for w in prange(workers):
        c0 = w * total // workers
        c1 = (w + 1) * total // workers
        for c in range(c0, c1):
            a = c // N
            k = c - a * N
            i = rows[a]
            st, sp = _cell_lin(A, B, C, D, x0, v_rows[i], dist[k], n_steps, lo, hi)
            S[i, k] = st
            steps[i, k] = sp


def _cell_python(plant, x0, v, dist, n_steps, lo, hi):
    x = x0.copy()
    y = plant.output(x, v)
    if not (lo <= y <= hi):
        return CELL_VIOLATED, 0
    for j in range(n_steps):
        x = plant.step(x, v) + dist[j]
        finite = np.all(np.isfinite(x)) and np.all(np.abs(x) <= STATE_LIMIT)
        if not finite:
            return CELL_OVERFLOW, j + 1
        y = plant.output(x, v)
        if not (lo <= y <= hi):
            return CELL_VIOLATED, j + 1
    return CELL_OK, n_steps


def rollout_cell(plant, x0, v: float, dist: np.ndarray, n_steps: int, lo: float, hi: float):
    """Evaluate one (setpoint, scenario) cell; returns (status, steps_run).

    status is CELL_OK / CELL_VIOLATED / CELL_OVERFLOW; steps_run counts
    transitions performed before returning (n_steps on a clean pass).
    """
    kind = plant.kernel_kind
    if kind == "surrogate-fc":
        return _cell_sfc(plant.step_size, x0, v, dist, n_steps, lo, hi)
    if kind == "linear":
        return _cell_lin(plant.A, plant.B, plant.C, plant.D, x0, v, dist, n_steps, lo, hi)
    return _cell_python(plant, x0, v, dist, n_steps, lo, hi)


def _python_fill(plant, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers):
    def fill_block(a0: int, a1: int):
        for a in range(a0, a1):
            i = rows[a]
            v = v_rows[i]
            for k in range(dist.shape[0]):
                st, sp = _cell_python(plant, x0, v, dist[k], n_steps, lo, hi)
                S[i, k] = st
                steps[i, k] = sp

    n_act = len(rows)
    if workers <= 1 or n_act == 0:
        fill_block(0, n_act)
        return
    bounds = [(w * n_act // workers, (w + 1) * n_act // workers) for w in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fill_block, a0, a1) for a0, a1 in bounds if a1 > a0]
        for f in futures:
            f.result()


def run_cells(
    plant,
    x0: np.ndarray,
    v_rows: np.ndarray,
    rows: np.ndarray,
    dist: np.ndarray,
    n_steps: int,
    lo: float,
    hi: float,
    S: np.ndarray,
    steps: np.ndarray,
    mode: str = "serial",
    workers: int = 1,
):
    """Fill status/steps matrices for the given rows against every scenario.

    mode "serial" iterates row-major on the calling thread. Mode "parallel"
    splits work across `workers` disjoint slices: contiguous row blocks when
    there are at least as many rows as workers, contiguous cell blocks
    otherwise. The partition never changes cell values, only who computes
    them.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if rows.size == 0:
        return
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    v_rows = np.ascontiguousarray(v_rows, dtype=np.float64)
    if mode not in ("serial", "parallel"):
        raise ConfigError(f"unknown fill mode {mode!r}")
    workers = max(1, int(workers))

    kind = plant.kernel_kind
    if kind == "surrogate-fc":
        h = float(plant.step_size)
        if mode == "serial":
            _sfc_serial(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows)
        elif rows.size >= workers:
            _sfc_rows(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers)
        else:
            _sfc_cells(h, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers)
    elif kind == "linear":
        A, B, C, D = plant.A, plant.B, plant.C, float(plant.D)
        if mode == "serial":
            _lin_serial(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows)
        elif rows.size >= workers:
            _lin_rows(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers)
        else:
            _lin_cells(A, B, C, D, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows, workers)
    else:
        _python_fill(
            plant, x0, v_rows, dist, n_steps, lo, hi, S, steps, rows,
            workers if mode == "parallel" else 1,
        )


def warmup() -> None:
    """Force JIT compilation of every kernel variant on tiny inputs.

    Call once before timing-sensitive work; cached compilation makes later
    process startups cheap.
    """
    x0s = np.zeros(3)
    x0l = np.zeros(1)
    A = np.array([[0.5]])
    B = np.array([0.5])
    C = np.array([1.0])
    dist = np.zeros((1, 2, 3))
    distl = np.zeros((1, 2, 1))
    rows = np.array([0], dtype=np.int64)
    v_rows = np.array([0.0])
    S = np.zeros((1, 1), dtype=np.uint8)
    sp = np.zeros((1, 1), dtype=np.int32)
    _cell_sfc(0.01, x0s, 0.0, dist[0], 1, -1.0, 1.0)
    _cell_lin(A, B, C, 0.0, x0l, 0.0, distl[0], 1, -1.0, 1.0)
    _sfc_serial(0.01, x0s, v_rows, dist, 1, -1.0, 1.0, S, sp, rows)
    _sfc_rows(0.01, x0s, v_rows, dist, 1, -1.0, 1.0, S, sp, rows, 1)
    _sfc_cells(0.01, x0s, v_rows, dist, 1, -1.0, 1.0, S, sp, rows, 1)
    _lin_serial(A, B, C, 0.0, x0l, v_rows, distl, 1, -1.0, 1.0, S, sp, rows)
    _lin_rows(A, B, C, 0.0, x0l, v_rows, distl, 1, -1.0, 1.0, S, sp, rows, 1)
    _lin_cells(A, B, C, 0.0, x0l, v_rows, distl, 1, -1.0, 1.0, S, sp, rows, 1)
