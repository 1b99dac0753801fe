"""Plant abstractions, a fixed-step RK4 discretizer and the bundled plants.

A :class:`Plant` is a deterministic discrete-time closed-loop system: a state
transition map ``step``, a scalar output map ``output`` and the equilibrium
output map ``steady_state_output``. Plants are immutable after construction
and safe to share across threads; all mutable state lives with the caller.

Two plants ship with the package:

* :class:`LinearOraclePlant` -- x+ = A x + B v, y = C x + D v, with the DC
  gain available in closed form. Used by the independent verification
  oracles and most numeric tests.
* :class:`SurrogateFuelCellPlant` -- a third-order nonlinear system with an
  analytic equilibrium manifold y_ss(v) = tanh(v), discretized from its ODE
  with fixed-step RK4. It is the default benchmark plant.

State coordinates are plain 1-D float64 numpy arrays. Plants also expose a
vectorized ``step_batch`` used by brute-force verification code, and the
bundled plants advertise a compiled-kernel kind consumed by the rollout
engine in :mod:`refgov.kernels`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .errors import ConfigError, IntegrationOverflowError

__all__ = [
    "Plant",
    "ContinuousPlant",
    "DiscretizedPlant",
    "LinearOraclePlant",
    "SurrogateFuelCellPlant",
    "rk4_step",
    "simulate_horizon",
    "STATE_ABORT_LIMIT",
]

# States beyond this magnitude abort propagation instead of drifting to inf/NaN.
STATE_ABORT_LIMIT = 1e6


class Plant(ABC):
    """Deterministic discrete-time closed-loop system under a constant setpoint."""

    state_dim: int

    #: kernel registry key for the compiled rollout engine; None means the
    #: generic (pure Python) evaluation path is used.
    kernel_kind: str | None = None

    @abstractmethod
    def step(self, x: np.ndarray, v: float) -> np.ndarray:
        """One-step state update x+ = f(x, v)."""

    @abstractmethod
    def output(self, x: np.ndarray, v: float) -> float:
        """Constrained output y = h(x, v)."""

    @abstractmethod
    def steady_state_output(self, v: float) -> float:
        """Equilibrium output reached under the constant setpoint v."""

    def step_batch(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Vectorized step for a batch of states X (m, n) and setpoints V (m,)."""
        return np.stack([self.step(X[i], float(V[i])) for i in range(X.shape[0])])

    def output_batch(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.array([self.output(X[i], float(V[i])) for i in range(X.shape[0])])

    def kernel_params(self) -> np.ndarray:
        """Packed parameter vector for the compiled kernels (kind-specific)."""
        raise NotImplementedError

    def validate_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.state_dim,):
            raise ConfigError(
                f"state must have shape ({self.state_dim},), got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ConfigError("state entries must be finite")
        return x


class ContinuousPlant(ABC):
    """Continuous-time closed-loop model to be discretized with RK4."""

    state_dim: int
    step_size: float

    @abstractmethod
    def derivative(self, x: np.ndarray, v: float) -> np.ndarray:
        """dx/dt under the constant setpoint v."""

    @abstractmethod
    def output(self, x: np.ndarray, v: float) -> float: ...

    @abstractmethod
    def steady_state_output(self, v: float) -> float: ...

    def derivative_batch(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        return np.stack([self.derivative(X[i], float(V[i])) for i in range(X.shape[0])])


def rk4_step(plant: ContinuousPlant, x: np.ndarray, v: float) -> np.ndarray:
    """Classical fixed-step RK4 update x + (h/6)(k1 + 2 k2 + 2 k3 + k4).

    Raises :class:`IntegrationOverflowError` identifying the first offending
    state index if the update produces a non-finite or runaway value.
    """
    h = plant.step_size
    if not h > 0:
        raise ConfigError(f"step_size must be positive, got {h}")
    k1 = plant.derivative(x, v)
    k2 = plant.derivative(x + 0.5 * h * k1, v)
    k3 = plant.derivative(x + 0.5 * h * k2, v)
    k4 = plant.derivative(x + h * k3, v)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    bad = ~np.isfinite(out) | (np.abs(out) > STATE_ABORT_LIMIT)
    if bad.any():
        idx = int(np.argmax(bad))
        raise IntegrationOverflowError(
            f"integration overflow in state {idx} (value {out[idx]!r})", state_index=idx
        )
    return out


def _rk4_step_batch(plant: ContinuousPlant, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    h = plant.step_size
    k1 = plant.derivative_batch(X, V)
    k2 = plant.derivative_batch(X + 0.5 * h * k1, V)
    k3 = plant.derivative_batch(X + 0.5 * h * k2, V)
    k4 = plant.derivative_batch(X + h * k3, V)
    return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class DiscretizedPlant(Plant):
    """Adapter turning a :class:`ContinuousPlant` into a discrete-time plant."""

    def __init__(self, continuous: ContinuousPlant):
        self.continuous = continuous
        self.state_dim = continuous.state_dim

    def step(self, x, v):
        return rk4_step(self.continuous, x, v)

    def step_batch(self, X, V):
        return _rk4_step_batch(self.continuous, X, V)

    def output(self, x, v):
        return self.continuous.output(x, v)

    def steady_state_output(self, v):
        return self.continuous.steady_state_output(v)


class LinearOraclePlant(Plant):
    """Pre-stabilized linear plant x+ = A x + B v, y = C x + D v.

    The spectral radius of A must be strictly below 1; the steady-state
    output is the DC gain (C (I - A)^-1 B + D) v.
    """

    kernel_kind = "linear"

    def __init__(self, A, B, C, D: float = 0.0):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        B = np.asarray(B, dtype=np.float64).reshape(-1)
        C = np.asarray(C, dtype=np.float64).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ConfigError(f"A must be square, got {A.shape}")
        if B.shape != (n,) or C.shape != (n,):
            raise ConfigError("B and C must be length-n vectors")
        rho = float(np.max(np.abs(np.linalg.eigvals(A)))) if n else 0.0
        if rho >= 1.0:
            raise ConfigError(f"A must have spectral radius < 1, got {rho:.6f}")
        self.A, self.B, self.C, self.D = A, B, C, float(D)
        self.state_dim = n
        self.dc_gain = float(self.C @ np.linalg.solve(np.eye(n) - self.A, self.B) + self.D)

    def step(self, x, v):
        return self.A @ x + self.B * v

    def step_batch(self, X, V):
        return X @ self.A.T + np.outer(V, self.B)

    def output(self, x, v):
        return float(self.C @ x + self.D * v)

    def output_batch(self, X, V):
        return X @ self.C + self.D * np.asarray(V)

    def steady_state_output(self, v):
        return self.dc_gain * v

    def kernel_params(self):
        n = self.state_dim
        return np.concatenate(
            [[float(n)], self.A.reshape(-1), self.B, self.C, [self.D]]
        ).astype(np.float64)


class _SurrogateFuelCellODE(ContinuousPlant):
    """Third-order nonlinear stand-in for an air-path stack model.

    dx1/dt = -x1 + tanh(x2)
    dx2/dt = -x2 + v
    dx3/dt = -2 x3 + x1
    y = x1

    Globally asymptotically stable for bounded v, with the analytic
    equilibrium manifold y_ss(v) = tanh(v).
    """

    state_dim = 3

    def __init__(self, step_size: float = 0.01):
        if not step_size > 0:
            raise ConfigError(f"step_size must be positive, got {step_size}")
        self.step_size = float(step_size)

    def derivative(self, x, v):
        return np.array(
            [-x[0] + np.tanh(x[1]), -x[1] + v, -2.0 * x[2] + x[0]], dtype=np.float64
        )

    def derivative_batch(self, X, V):
        out = np.empty_like(X)
        out[:, 0] = -X[:, 0] + np.tanh(X[:, 1])
        out[:, 1] = -X[:, 1] + np.asarray(V)
        out[:, 2] = -2.0 * X[:, 2] + X[:, 0]
        return out

    def output(self, x, v):
        return float(x[0])

    def steady_state_output(self, v):
        return float(np.tanh(v))


class SurrogateFuelCellPlant(DiscretizedPlant):
    """RK4-discretized surrogate benchmark plant (see :class:`_SurrogateFuelCellODE`)."""

    kernel_kind = "surrogate-fc"

    def __init__(self, step_size: float = 0.01):
        super().__init__(_SurrogateFuelCellODE(step_size))
        self.step_size = float(step_size)

    def output(self, x, v):
        return float(x[0])

    def output_batch(self, X, V):
        return X[:, 0].copy()

    def kernel_params(self):
        return np.array([self.step_size], dtype=np.float64)


def simulate_horizon(
    plant: Plant,
    x0: np.ndarray,
    v: float,
    horizon: int,
    disturbance: Sequence[np.ndarray] | np.ndarray | None = None,
) -> np.ndarray:
    """Forward-simulate ``horizon`` outputs y_0 .. y_{horizon-1} under constant v.

    The optional disturbance is a per-step additive term on the discrete
    update: x_{j+1} = f(x_j, v) + d_j. It must provide at least horizon-1
    entries of the plant's state dimension.
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    x = plant.validate_state(x0)
    d = None
    if disturbance is not None:
        d = np.asarray(disturbance, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] != plant.state_dim:
            raise ConfigError(
                f"disturbance must have shape (>= {horizon - 1}, {plant.state_dim}), got {d.shape}"
            )
        if d.shape[0] < horizon - 1:
            raise ConfigError(
                f"disturbance provides {d.shape[0]} steps, horizon needs {horizon - 1}"
            )
    y = np.empty(horizon, dtype=np.float64)
    for j in range(horizon):
        y[j] = plant.output(x, v)
        if j == horizon - 1:
            break
        x = plant.step(x, v)
        if d is not None:
            x = x + d[j]
        bad = ~np.isfinite(x) | (np.abs(x) > STATE_ABORT_LIMIT)
        if bad.any():
            idx = int(np.argmax(bad))
            raise IntegrationOverflowError(
                f"state {idx} overflowed at step {j + 1} (value {x[idx]!r})",
                state_index=idx,
            )
    return y


_PLANT_KINDS = {
    "linear-oracle": LinearOraclePlant,
    "surrogate-fc": SurrogateFuelCellPlant,
}


def make_plant(kind: str, **kwargs) -> Plant:
    """Instantiate a bundled plant by its string identifier."""
    if kind == "surrogate-fc":
        return SurrogateFuelCellPlant(step_size=kwargs.get("step_size", 0.01))
    if kind == "linear-oracle":
        missing = [k for k in ("A", "B", "C") if k not in kwargs]
        if missing:
            raise ConfigError(f"linear-oracle plant requires matrices {missing}")
        return LinearOraclePlant(
            kwargs["A"], kwargs["B"], kwargs["C"], kwargs.get("D", 0.0)
        )
    raise ConfigError(f"unknown plant kind {kind!r}; known: {sorted(_PLANT_KINDS)}")
