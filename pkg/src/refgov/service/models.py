"""Request and response schemas for the service endpoints."""

from typing import Any, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str
    backends: dict[str, bool]


class GovernStepRequest(BaseModel):
    """One governor update at the current plant state.

    ``config`` uses the same schema as the JSON config file and is merged
    over the named preset.  ``t`` advances the scenario stream so repeated
    calls do not reuse disturbance draws.
    """

    config: dict[str, Any] = Field(default_factory=dict)
    x: Optional[list[float]] = None
    v_prev: float = 0.0
    r: float
    t: int = 0


class GovernStepResponse(BaseModel):
    kappa_opt: float
    v_applied: float
    feasible: bool
    diagnostics: dict[str, Any]


class RunRow(BaseModel):
    t: int
    r_t: float
    v_t: float
    y_t: float
    kappa_opt: float
    feasible: bool
    wall_us: int


class RunRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    governor_on: bool = True


class RunResponse(BaseModel):
    rows: list[RunRow]
    violations: int
    aborted: bool
    abort_reason: Optional[str] = None
    seed: int
    diag_rows: list[str]


class BenchRequest(BaseModel):
    """Timing sweep over simulation counts and backends.

    ``n_sim`` accepts either an explicit list or a range spec string like
    ``"1:32:1,32:8192:32"`` (inclusive ends).
    """

    config: dict[str, Any] = Field(default_factory=dict)
    n_sim: str | list[int] = "1:32:1"
    backends: list[str] = Field(default_factory=lambda: ["serial"])
    reps: int = 20
    modes: list[str] = Field(default_factory=lambda: ["kernel-only", "end-to-end"])
    seed: int = 7


class TimingRow(BaseModel):
    backend: str
    n_sim: int
    mode: str
    mean_us: Optional[float] = None
    min_us: Optional[float] = None
    max_us: Optional[float] = None
    reps: int
    skipped: bool = False


class BenchResponse(BaseModel):
    records: list[TimingRow]
    skipped: int


class OracleRequest(BaseModel):
    suite: str = "linear"
    cases: int = 100
    seed: int = 2024
    j_star: int = 64


class OracleRow(BaseModel):
    case: str
    expected: Optional[float] = None
    actual: Optional[float] = None
    tolerance: float
    passed: bool


class OracleResponse(BaseModel):
    reports: list[OracleRow]
    failed: int


class ErrorPayload(BaseModel):
    detail: str
    kind: str
