"""Scenario orchestration shared by the HTTP service and the CLI.

Each runner takes a validated ScenarioConfig, builds the model/prior and
trigger, executes the requested computation, and returns either CSV text
or a plain report dict.  All error translation to exit codes / HTTP
statuses happens in the callers.
"""

from __future__ import annotations

from .config import (
    DEFAULT_RUNS,
    DEFAULT_VALIDATE_SAMPLES,
    ConfigError,
    ScenarioConfig,
    build_model_prior,
    build_trigger,
    validate_sim,
)
from .harness import (
    monte_carlo,
    period_csv,
    run_closed_loop,
    sweep,
    sweep_csv,
    trace_csv,
)
from .model import RngStream
from .triggers import steady_state_period
from .validation import overall_status, run_validation


class NumericError(RuntimeError):
    """A computation failed to converge or produced non-finite values."""


def _prepare(cfg: ScenarioConfig):
    validate_sim(cfg)
    model, prior = build_model_prior(cfg)
    spec = build_trigger(cfg)
    return model, prior, spec


def simulate_csv(cfg: ScenarioConfig) -> str:
    """One closed-loop run on stream (seed, 0), rendered as a trace CSV."""
    model, prior, spec = _prepare(cfg)
    try:
        trace = run_closed_loop(
            model, prior, spec, cfg.steps, RngStream(cfg.seed, 0)
        )
    except (ArithmeticError, RuntimeError) as exc:
        raise NumericError(str(exc)) from exc
    return trace_csv(trace)


def sweep_points(cfg: ScenarioConfig, triggers: list[str], cost_grid: list[float],
                 workers: int = 1) -> list:
    if not triggers:
        raise ConfigError("at least one trigger kind is required")
    if not cost_grid:
        raise ConfigError("cost grid must be nonempty")
    for c in cost_grid:
        if c < 0:
            raise ConfigError(f"costs must be >= 0, got {c}")
    validate_sim(cfg)
    model, prior = build_model_prior(cfg)
    runs = cfg.runs if cfg.runs is not None else DEFAULT_RUNS
    points = []
    for kind in triggers:
        if kind not in ("et", "pt", "st"):
            raise ConfigError(f"unknown trigger kind {kind!r}")
        horizon = 0
        if kind == "pt":
            if cfg.horizon is None or cfg.horizon < 1:
                raise ConfigError("trigger.kind = pt requires trigger.M >= 1")
            horizon = cfg.horizon
        try:
            points.extend(
                sweep(model, prior, kind, cost_grid, cfg.steps, runs, cfg.seed,
                      horizon=horizon, max_search=cfg.max_search,
                      workers=workers)
            )
        except (ArithmeticError, RuntimeError) as exc:
            raise NumericError(str(exc)) from exc
    return points


def sweep_csv_for(cfg: ScenarioConfig, triggers: list[str],
                  cost_grid: list[float], workers: int = 1) -> str:
    return sweep_csv(sweep_points(cfg, triggers, cost_grid, workers=workers))


def period_pairs(cfg: ScenarioConfig, cost_grid: list[float]) -> list:
    if not cost_grid:
        raise ConfigError("cost grid must be nonempty")
    for c in cost_grid:
        if c < 0:
            raise ConfigError(f"costs must be >= 0, got {c}")
    model, _ = build_model_prior(cfg)
    if not model.is_lti:
        raise ConfigError("steady-state period analysis requires an LTI model")
    pairs = []
    for c in cost_grid:
        try:
            pairs.append((float(c), steady_state_period(model, float(c),
                                                        cfg.max_search)))
        except (ArithmeticError, RuntimeError) as exc:
            raise NumericError(str(exc)) from exc
    return pairs


def period_csv_for(cfg: ScenarioConfig, cost_grid: list[float]) -> str:
    return period_csv(period_pairs(cfg, cost_grid))


def validation_report(cfg: ScenarioConfig) -> dict:
    """Run the calibration checks and fold them into a plain report dict."""
    model, prior = build_model_prior(cfg)
    samples = cfg.runs if cfg.runs is not None else DEFAULT_VALIDATE_SAMPLES
    try:
        results = run_validation(model, prior, samples=samples, seed=cfg.seed)
    except (ArithmeticError, RuntimeError) as exc:
        raise NumericError(str(exc)) from exc
    return {
        "status": overall_status(results),
        "checks": [
            {
                "name": r.name,
                "status": r.status,
                "statistic": r.statistic,
                "threshold": r.threshold,
                "detail": r.detail,
            }
            for r in results
        ],
    }
