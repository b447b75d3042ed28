"""Event-based remote state estimation laboratory.

Simulates linear-Gaussian systems with a smart sensor that runs a local
Kalman filter and decides, under event/predictive/self triggering rules,
when to transmit its estimate to a remote estimator.  Includes Monte
Carlo trade-off sweeps, steady-state period analysis, calibration
checks, an HTTP service, and a CSV-emitting CLI.
"""

from .config import (
    ConfigError,
    ScenarioConfig,
    build_model_prior,
    build_trigger,
    parse_config,
    scenario_from_dict,
)
from .filtering import (
    CovarianceSchedule,
    FilterState,
    RemoteState,
    filter_step,
    initial_filter_state,
    initial_remote_state,
    remote_step,
    variance_schedule,
)
from .harness import (
    SimulationTrace,
    TradeoffPoint,
    detect_period,
    determinism_metric,
    monte_carlo,
    period_csv,
    run_closed_loop,
    run_metrics,
    sweep,
    sweep_csv,
    trace_csv,
)
from .model import LinearGaussianModel, Prior, RngStream, simulate_trajectory
from .triggers import (
    CostSchedule,
    DecisionLedger,
    TriggerSpec,
    event_trigger,
    mean_signal,
    predictive_trigger,
    self_trigger,
    steady_state_period,
    steady_state_posterior,
    variance_signal,
)
from .validation import CheckResult, overall_status, run_validation

__version__ = "1.0.0"

__all__ = [
    "CheckResult",
    "ConfigError",
    "CostSchedule",
    "CovarianceSchedule",
    "DecisionLedger",
    "FilterState",
    "LinearGaussianModel",
    "Prior",
    "RemoteState",
    "RngStream",
    "ScenarioConfig",
    "SimulationTrace",
    "TradeoffPoint",
    "TriggerSpec",
    "build_model_prior",
    "build_trigger",
    "detect_period",
    "determinism_metric",
    "event_trigger",
    "filter_step",
    "initial_filter_state",
    "initial_remote_state",
    "mean_signal",
    "monte_carlo",
    "overall_status",
    "parse_config",
    "period_csv",
    "predictive_trigger",
    "remote_step",
    "run_closed_loop",
    "run_metrics",
    "run_validation",
    "scenario_from_dict",
    "self_trigger",
    "simulate_trajectory",
    "steady_state_period",
    "steady_state_posterior",
    "sweep",
    "sweep_csv",
    "trace_csv",
    "variance_schedule",
    "variance_signal",
]
