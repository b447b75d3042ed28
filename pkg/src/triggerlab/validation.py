"""Statistical self-checks for the predicted error distributions.

The two predicted-error results are exact finite-sample statements, so
they can be verified by conditional Monte Carlo: freeze one measurement
history up to a reference time, sample many futures, and compare the
empirical moments of the remote errors (with and without a transmission
at the target time) against the predicted Gaussians at three standard
errors. A structural check also confirms that the event trigger and the
zero-horizon predictive trigger make identical decisions on shared noise.

Checks with too few samples report "inconclusive" rather than "pass".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import triggers
from .filtering import (
    RemoteState,
    filter_step,
    initial_filter_state,
    variance_schedule,
)
from .harness import run_closed_loop
from .linalg import cholesky
from .model import LinearGaussianModel, Prior, RngStream, transition_product
from .triggers import CostSchedule, DecisionLedger, TriggerSpec, error_with_update

MIN_CONCLUSIVE_SAMPLES = 10_000
Z_LIMIT = 3.0

REFERENCE_TIME = 60   # history length before the conditional rollouts
LEAD = 3              # steps since the last transmission at the reference time
HORIZON = 2           # prediction horizon checked


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str        # "pass" | "fail" | "inconclusive"
    statistic: float   # worst z-score (or mismatch count)
    threshold: float
    detail: str


def overall_status(results: list[CheckResult]) -> str:
    if any(r.status == "fail" for r in results):
        return "fail"
    if any(r.status == "inconclusive" for r in results):
        return "inconclusive"
    return "pass"


def _moment_check(name: str, emp: np.ndarray, predicted_mean: np.ndarray,
                  conclusive: bool) -> CheckResult:
    """Compare the sample mean of `emp` (n, d) against a predicted mean."""
    n = emp.shape[0]
    se = emp.std(axis=0, ddof=1) / np.sqrt(n)
    se = np.maximum(se, 1e-300)
    z = float(np.max(np.abs(emp.mean(axis=0) - predicted_mean) / se))
    status = ("pass" if z <= Z_LIMIT else "fail") if conclusive else "inconclusive"
    return CheckResult(name, status, z, Z_LIMIT,
                       f"max |sample mean - predicted| = {z:.3f} standard errors")


def _trace_var_check(name: str, emp: np.ndarray, predicted_trace: float,
                     conclusive: bool) -> CheckResult:
    """Compare the trace of the sample covariance against a prediction."""
    n = emp.shape[0]
    centered = emp - emp.mean(axis=0)
    emp_trace = float((centered**2).sum(axis=1).mean()) * n / (n - 1)
    se = emp_trace * np.sqrt(2.0 / (n - 1))
    z = float(abs(emp_trace - predicted_trace) / max(se, 1e-300))
    status = ("pass" if z <= Z_LIMIT else "fail") if conclusive else "inconclusive"
    return CheckResult(
        name, status, z, Z_LIMIT,
        f"sample var trace {emp_trace:.6f} vs predicted {predicted_trace:.6f} "
        f"({z:.3f} standard errors)",
    )


def run_validation(
    model: LinearGaussianModel,
    prior: Prior,
    samples: int = 100_000,
    seed: int = 1,
    equiv_runs: int = 100,
) -> list[CheckResult]:
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    conclusive = samples >= MIN_CONCLUSIVE_SAMPLES

    k0, lead, m = REFERENCE_TIME, LEAD, HORIZON
    ell = k0 - lead
    schedule = variance_schedule(model, prior, k0 + m)

    # one frozen measurement history up to k0
    base_rng = RngStream(seed, 0)
    from .model import simulate_trajectory

    traj = simulate_trajectory(model, prior, k0, base_rng)
    filt = initial_filter_state(prior)
    local_at_ell = None
    for k in range(1, k0 + 1):
        filt = filter_step(filt, traj.measurement(k), model)
        if k == ell:
            local_at_ell = filt.mean.copy()
    remote_mean = transition_product(model, ell, k0 - 1) @ local_at_ell
    remote = RemoteState(k=k0, mean=remote_mean, last_transmit=ell)

    ledger = DecisionLedger()
    for t in range(1, k0 + m):
        ledger.commit(t, 1 if t in (1, ell) else 0)

    belief_no_update = triggers.error_without_update(
        k0, m, filt, remote, ledger, model, schedule
    )
    belief_update = error_with_update(k0, m, schedule)
    # route the no-update covariance trace through the trigger signal so a
    # corrupted signal computation is caught here
    predicted_trace_no_update = triggers.variance_signal(
        k0, m, schedule, filt.cov, model
    ) + float(np.trace(schedule.post_cov[k0 + m]))

    # conditional rollouts: sample the state at k0 from the filter belief,
    # then propagate futures with fresh process/measurement noise
    rng = RngStream(seed, 1)
    n = samples
    nx, ny = model.nx, model.ny
    x = filt.mean + rng.standard_normal((n, nx)) @ cholesky(filt.cov).T
    xf = np.tile(filt.mean, (n, 1))
    for j in range(1, m + 1):
        k = k0 + j
        a = model.a(k - 1)
        h = model.h(k)
        v = rng.standard_normal((n, nx)) @ model.noise_factor_q(k - 1).T
        w = rng.standard_normal((n, ny)) @ model.noise_factor_r(k).T
        x = x @ a.T + v
        y = x @ h.T + w
        pred = xf @ a.T
        xf = pred + (y - pred @ h.T) @ schedule.gains[k].T
    remote_open_loop = transition_product(model, k0, k0 + m - 1) @ remote.mean
    err_no_update = x - remote_open_loop
    err_update = x - xf

    results = [
        _moment_check("no_update_error_mean", err_no_update,
                      belief_no_update.mean, conclusive),
        _trace_var_check("no_update_error_cov", err_no_update,
                         predicted_trace_no_update, conclusive),
        _moment_check("update_error_mean", err_update,
                      belief_update.mean, conclusive),
        _trace_var_check("update_error_cov", err_update,
                         float(np.trace(belief_update.cov)), conclusive),
        _et_pt0_check(model, prior, seed, equiv_runs),
    ]
    return results


def _et_pt0_check(
    model: LinearGaussianModel, prior: Prior, seed: int, runs: int
) -> CheckResult:
    """Event trigger vs zero-horizon predictive trigger on shared noise."""
    cost = CostSchedule(constant=0.25)
    steps = 80
    mismatches = 0
    for i in range(runs):
        et = run_closed_loop(model, prior,
                             TriggerSpec(kind="et", cost=cost),
                             steps, RngStream(seed, 100_000 + i))
        pt = run_closed_loop(model, prior,
                             TriggerSpec(kind="pt", cost=cost, horizon=0),
                             steps, RngStream(seed, 100_000 + i))
        if not np.array_equal(et.gamma, pt.gamma):
            mismatches += 1
    status = "pass" if mismatches == 0 else "fail"
    return CheckResult(
        "event_vs_zero_horizon_predictive", status, float(mismatches), 0.0,
        f"{mismatches} of {runs} shared-noise runs disagree",
    )
