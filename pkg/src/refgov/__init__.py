"""Scenario-robust reference governor toolkit.

Shapes setpoint changes so that a constrained output stays inside its
bounds over a prediction horizon, robustly against sampled disturbance
scenarios. Provides a bisection governor for the nominal case, a
sequential scenario version, and a grid-parallel version with serial,
multicore, and external-runner GPU backends, plus closed-loop and
benchmark harnesses and independent oracles.
"""

from .constraints import ConstraintSet, contains, tighten, tighten_margin, validate_epsilon
from .disturbance import (
    DisturbanceModel,
    ScenarioSet,
    counter_uniform,
    derive_seed,
    read_rgsc,
    sample_scenarios,
    write_rgsc,
    zero_scenarios,
)
from .dynamics import (
    LinearOraclePlant,
    Plant,
    SurrogateFuelCellPlant,
    make_plant,
    rk4_step,
    simulate_horizon,
)
from .errors import (
    BackendUnavailableError,
    ConfigError,
    DomainError,
    InfeasibleError,
    IntegrationOverflowError,
    RefgovError,
)
from .governor import (
    GovernorConfig,
    GovernorState,
    KappaResult,
    bisection_rg,
    extract_kappa_opt,
    fill_feasibility,
    grid_kappas,
    robust_rg_parallel,
    robust_rg_sequential,
    update_setpoint,
)
from .harness import (
    ReferenceProfile,
    RunRecord,
    TimingRecord,
    bench_sweep,
    emit_csv,
    parse_nsim_spec,
    run_closed_loop,
)
from .oracle import OracleReport, brute_force_kappa, linear_maximal_kappa, run_oracle_suite
from .config import RunSetup, load_config, preset_names

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConstraintSet", "contains", "tighten", "tighten_margin", "validate_epsilon",
    "DisturbanceModel", "ScenarioSet", "counter_uniform", "derive_seed",
    "sample_scenarios", "zero_scenarios", "read_rgsc", "write_rgsc",
    "Plant", "LinearOraclePlant", "SurrogateFuelCellPlant", "make_plant",
    "rk4_step", "simulate_horizon",
    "RefgovError", "ConfigError", "DomainError", "IntegrationOverflowError",
    "BackendUnavailableError", "InfeasibleError",
    "GovernorConfig", "GovernorState", "KappaResult", "update_setpoint",
    "grid_kappas", "fill_feasibility", "extract_kappa_opt",
    "bisection_rg", "robust_rg_sequential", "robust_rg_parallel",
    "ReferenceProfile", "RunRecord", "TimingRecord",
    "run_closed_loop", "bench_sweep", "emit_csv", "parse_nsim_spec",
    "OracleReport", "brute_force_kappa", "linear_maximal_kappa", "run_oracle_suite",
    "RunSetup", "load_config", "preset_names",
]
