"""Counter-based disturbance sampling and the RGSC scenario dump format.

Scenario disturbances are drawn from a stateless counter-based generator:
the value at coordinates (seed, scenario k, step j, state i) is a pure hash
of those integers, so any slice of the tensor can be generated in any order,
on any number of threads, with bit-identical results. Growing the scenario
count from N to N' > N leaves the first N scenarios unchanged, which makes
nested scenario sets free.

The mixer is the 64-bit finalizer of splitmix64. Uniform doubles take the
top 53 bits of the hash.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "splitmix64",
    "counter_uniform",
    "derive_seed",
    "DisturbanceModel",
    "ScenarioSet",
    "sample_scenarios",
    "zero_scenarios",
    "write_rgsc",
    "read_rgsc",
]

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit integer."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _hash4(seed: int, k: int, j: int, i: int) -> int:
    # Chain the finalizer over the coordinates; each stage avalanches fully,
    # so distinct tuples give independent-looking outputs.
    h = splitmix64(seed & _MASK)
    h = splitmix64((h ^ k) & _MASK)
    h = splitmix64((h ^ j) & _MASK)
    h = splitmix64((h ^ i) & _MASK)
    return h


def counter_uniform(seed: int, k: int, j: int, i: int) -> float:
    """Uniform double in [0, 1) at integer coordinates (seed, k, j, i)."""
    return (_hash4(seed, k, j, i) >> 11) * 2.0**-53


def derive_seed(master: int, label: str) -> int:
    """Derive an independent stream seed from a master seed and a text label."""
    h = splitmix64(master & _MASK)
    for b in label.encode("utf-8"):
        h = splitmix64((h ^ b) & _MASK)
    return h


# Vectorized mirror of the scalar hash. uint64 array arithmetic wraps mod
# 2^64, matching the masked Python-int reference bit for bit; a test pins
# the two paths against each other.
_U = np.uint64


def _splitmix64_vec(z: np.ndarray) -> np.ndarray:
    z = z + _U(_GOLDEN)
    z = (z ^ (z >> _U(30))) * _U(_MIX1)
    z = (z ^ (z >> _U(27))) * _U(_MIX2)
    return z ^ (z >> _U(31))


def _uniform_grid(seed: int, n_sim: int, horizon: int, width: int, k0: int = 0) -> np.ndarray:
    """Uniforms at coordinates (seed, k0..k0+n_sim-1, 0..horizon-1, 0..width-1)."""
    with np.errstate(over="ignore"):
        hs = _splitmix64_vec(np.array([seed & _MASK], dtype=np.uint64))[0]
        K = _splitmix64_vec(hs ^ np.arange(k0, k0 + n_sim, dtype=np.uint64))
        J = _splitmix64_vec(K[:, None] ^ np.arange(horizon, dtype=np.uint64))
        H = _splitmix64_vec(J[:, :, None] ^ np.arange(width, dtype=np.uint64))
    return (H >> _U(11)).astype(np.float64) * 2.0**-53


_DIST_KINDS = ("uniform", "gaussian")


@dataclass(frozen=True)
class DisturbanceModel:
    """Per-state disturbance description: one (lo, hi) range per state.

    Only the uniform kind is implemented; "gaussian" is reserved in the
    enum and rejected at sampling time.
    """

    ranges: tuple
    kind: str = "uniform"

    def __post_init__(self):
        try:
            ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"ranges must be (lo, hi) pairs: {e}") from None
        if not ranges:
            raise ConfigError("ranges must have at least one (lo, hi) pair")
        for i, (lo, hi) in enumerate(ranges):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ConfigError(f"range {i} must be finite, got ({lo}, {hi})")
            if lo > hi:
                raise ConfigError(f"range {i} has lo > hi: ({lo}, {hi})")
        if self.kind not in _DIST_KINDS:
            raise ConfigError(f"unknown disturbance kind {self.kind!r}; known: {_DIST_KINDS}")
        object.__setattr__(self, "ranges", ranges)

    @property
    def state_dim(self) -> int:
        return len(self.ranges)

    @classmethod
    def scaled(cls, magnitude: float, state_dim: int) -> "DisturbanceModel":
        """Symmetric model with every state in [-magnitude, magnitude]."""
        return cls(tuple((-magnitude, magnitude) for _ in range(state_dim)))


@dataclass(frozen=True)
class ScenarioSet:
    """A dense (n_sim, horizon, n) tensor of additive state disturbances.

    data[k, j, :] is added to the state after the j-th transition of
    scenario k. Regenerating with the same (seed, model, dims) reproduces
    the tensor bit-exactly. Not mutated after construction.
    """

    data: np.ndarray
    seed: int | None = None
    model: DisturbanceModel | None = field(default=None, compare=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3:
            raise ConfigError(f"scenario data must be 3-D (n_sim, horizon, n), got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ConfigError("scenario data must be finite")
        object.__setattr__(self, "data", d)

    @property
    def scenarios(self) -> np.ndarray:
        return self.data

    @property
    def n_sim(self) -> int:
        return self.data.shape[0]

    @property
    def horizon(self) -> int:
        return self.data.shape[1]

    @property
    def state_dim(self) -> int:
        return self.data.shape[2]

    def prefix(self, n_sim: int) -> "ScenarioSet":
        """The nested subset holding only the first n_sim scenarios."""
        if not 1 <= n_sim <= self.n_sim:
            raise ConfigError(f"prefix size {n_sim} out of range [1, {self.n_sim}]")
        return ScenarioSet(self.data[:n_sim], seed=self.seed, model=self.model)


def sample_scenarios(
    model: DisturbanceModel, n_sim: int, horizon: int, seed: int
) -> ScenarioSet:
    """Draw an (n_sim, horizon, state_dim) scenario tensor.

    Entry (k, j, i) is lo_i + (hi_i - lo_i) * u where u is the counter
    uniform at (seed, k, j, i); a zero-width range yields the constant lo.
    For a prediction horizon of j_star steps pass horizon = j_star + 1.
    """
    if n_sim < 1 or horizon < 1:
        raise ConfigError(f"n_sim and horizon must be >= 1, got {n_sim}, {horizon}")
    if model.kind != "uniform":
        raise ConfigError(f"disturbance kind {model.kind!r} is reserved but not implemented")
    lo = np.array([r[0] for r in model.ranges])
    span = np.array([r[1] - r[0] for r in model.ranges])
    n = model.state_dim

    data = np.empty((n_sim, horizon, n), dtype=np.float64)
    # Chunk over scenarios so paper-scale tensors do not spike transient memory.
    chunk = max(1, min(n_sim, (1 << 24) // max(1, horizon * n)))
    for k0 in range(0, n_sim, chunk):
        nk = min(chunk, n_sim - k0)
        u = _uniform_grid(seed, nk, horizon, n, k0=k0)
        data[k0 : k0 + nk] = lo + span * u
    return ScenarioSet(data, seed=seed, model=model)


def zero_scenarios(n: int, horizon: int) -> ScenarioSet:
    """The single all-zero scenario: robust evaluation degenerates to nominal."""
    if n < 1 or horizon < 1:
        raise ConfigError(f"n and horizon must be >= 1, got {n}, {horizon}")
    return ScenarioSet(np.zeros((1, horizon, n), dtype=np.float64), seed=None)


_RGSC_MAGIC = b"RGSC"


def write_rgsc(path, scen: ScenarioSet) -> None:
    """Write a scenario set as an RGSC binary dump.

    Layout: magic "RGSC", three little-endian uint32 (n_sim, horizon, n),
    then n_sim*horizon*n little-endian float32 values in [k][j][i] order.
    """
    header = _RGSC_MAGIC + struct.pack("<III", scen.n_sim, scen.horizon, scen.state_dim)
    body = np.ascontiguousarray(scen.data, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(body)


def read_rgsc(path) -> ScenarioSet:
    """Read an RGSC binary dump back into a :class:`ScenarioSet`."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16 or raw[:4] != _RGSC_MAGIC:
        raise ConfigError(f"{path}: not an RGSC file (bad magic or truncated header)")
    n_sim, horizon, n = struct.unpack("<III", raw[4:16])
    expect = 16 + 4 * n_sim * horizon * n
    if len(raw) != expect:
        raise ConfigError(
            f"{path}: expected {expect} bytes for ({n_sim}, {horizon}, {n}), got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=16).astype(np.float64)
    return ScenarioSet(data.reshape(n_sim, horizon, n))
