"""Closed-loop simulation and Monte Carlo trade-off evaluation.

Per-step protocol at each time k = 1..K: measure, run the local filter,
apply the transmission decision for k at the remote estimator, then make
whatever decision the trigger owes (ET decides for k itself before
applying; PT commits the decision for k + M; ST recomputes only at
transmission instants). The first transmission (k = 1) is always forced.

Everything measurement-independent (covariance schedule, gains, the
open-loop/closed-loop trace-gap table, transition products) is tabulated
once per model and shared across runs, so a run costs only the mean
recursions. Runs are evaluated in batches; all batch operations are
elementwise per run, so results are bitwise independent of batch shape
and worker count. Run i always consumes stream (seed, i), which keeps
noise realizations paired across triggers and costs.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .filtering import variance_schedule
from .model import LinearGaussianModel, Prior, RngStream, simulate_trajectories, transition_product
from .triggers import CostSchedule, TriggerSpec

_CHUNK = 512          # fixed batch size; must not depend on worker count
TRANSIENT_STEPS = 50  # steps discarded by period/determinism diagnostics


@dataclass(frozen=True)
class SimulationTrace:
    """Per-step record of one closed-loop run (k = 1..K)."""

    kind: str
    x: np.ndarray            # (K, nx) true states
    y: np.ndarray            # (K, ny) measurements
    xhat_local: np.ndarray   # (K, nx) local posterior means
    xhat_remote: np.ndarray  # (K, nx) remote estimates
    gamma: np.ndarray        # (K,) transmission decisions
    mean_sig: np.ndarray     # (K,) squared-bias part of the trigger statistic
    var_sig: np.ndarray      # (K,) covariance-gap part
    total_sig: np.ndarray    # (K,) statistic compared against the cost
    cost: np.ndarray         # (K,) threshold in effect for the decision at k

    @property
    def horizon(self) -> int:
        return self.x.shape[0]

    @property
    def local_error(self) -> np.ndarray:
        return self.x - self.xhat_local

    @property
    def remote_error(self) -> np.ndarray:
        return self.x - self.xhat_remote


@dataclass(frozen=True)
class RunMetrics:
    """Averages over one run: squared remote error and communication rate."""

    err: float
    comm: float


@dataclass(frozen=True)
class TradeoffPoint:
    """Monte Carlo aggregate for one (trigger, cost) combination."""

    trigger: str
    horizon: int
    cost: float
    n_runs: int
    steps: int
    seed: int
    comm_mean: float
    err_mean: float
    err_std: float


@dataclass(frozen=True)
class _Tables:
    """Measurement-independent precomputation shared by every run.

    gap[s, t] is the trace of (open-loop covariance propagated from the
    posterior at time s up to time t) minus (posterior covariance at t),
    for 0 <= s <= t <= T. Arithmetic matches triggers.variance_signal
    exactly so both routes agree bitwise.
    """

    steps: int                # K
    top: int                  # T = K + horizon
    horizon: int              # PT horizon baked into phi
    x0_mean: np.ndarray
    a_mats: list              # A_k for k = 0..T-1
    h_mats: list              # index k = 1..K ([0] is None)
    gains: list               # index k = 1..K ([0] is None)
    phi: list                 # index k = 1..K ([0] is None), M-step products
    gap: np.ndarray           # (T+1, T+1)


def _build_tables(
    model: LinearGaussianModel, prior: Prior, steps: int, horizon: int
) -> _Tables:
    top = steps + horizon
    sched = variance_schedule(model, prior, top)
    a_mats = [model.a(k) for k in range(top)]
    q_mats = [model.q(k) for k in range(top)]
    h_mats: list = [None] + [model.h(k) for k in range(1, steps + 1)]
    gains = [None] + [sched.gains[k] for k in range(1, steps + 1)]
    phi = [None] + [
        transition_product(model, k, k + horizon - 1) for k in range(1, steps + 1)
    ]
    post_trace = np.array([float(np.trace(p)) for p in sched.post_cov])
    gap = np.zeros((top + 1, top + 1))
    for s in range(top + 1):
        p = sched.post_cov[s]
        for t in range(s + 1, top + 1):
            raw = a_mats[t - 1] @ p @ a_mats[t - 1].T + q_mats[t - 1]
            p = 0.5 * (raw + raw.T)
            gap[s, t] = max(float(np.trace(p)) - post_trace[t], 0.0)
    return _Tables(
        steps=steps, top=top, horizon=horizon, x0_mean=prior.mean.copy(),
        a_mats=a_mats, h_mats=h_mats, gains=gains, phi=phi, gap=gap,
    )


def _local_means(tables: _Tables, ys: np.ndarray) -> np.ndarray:
    """Vectorized local-filter mean recursion; gains come from the tables."""
    n = ys.shape[0]
    steps = tables.steps
    out = np.empty((n, steps + 1, tables.x0_mean.shape[0]))
    out[:, 0] = tables.x0_mean
    for k in range(1, steps + 1):
        pred = out[:, k - 1] @ tables.a_mats[k - 1].T
        innov = ys[:, k] - pred @ tables.h_mats[k].T
        out[:, k] = pred + innov @ tables.gains[k].T
    return out


def _st_decisions(tables: _Tables, cost_vec: np.ndarray, max_search: int) -> np.ndarray:
    """Offline self-trigger chain; identical for every run."""
    gamma = np.zeros(tables.steps + 1, dtype=np.int8)
    gamma[1] = 1
    ell = 1
    while True:
        nxt = None
        for t in range(ell + 1, min(ell + max_search, tables.top) + 1):
            if tables.gap[ell, t] >= cost_vec[t]:
                nxt = t
                break
        if nxt is None or nxt > tables.steps:
            return gamma
        gamma[nxt] = 1
        ell = nxt


def _decision_pass(
    tables: _Tables, spec: TriggerSpec, cost_vec: np.ndarray, xhat_local: np.ndarray
):
    """Remote estimates, decisions, and trigger signals for a batch.

    Returns (gamma (n, K+1), xhat (n, K+1, nx), mean_sig, var_sig,
    total_sig, cost_col), each signal array shaped (n, K+1) with index 0
    unused.
    """
    n, _, nx = xhat_local.shape
    steps, top = tables.steps, tables.top
    horizon = spec.horizon if spec.kind == "pt" else 0
    gamma = np.zeros((n, top + 1), dtype=np.int8)
    gamma[:, 1] = 1
    kappa = np.ones(n, dtype=np.int64)
    mean_sig = np.zeros((n, steps + 1))
    var_sig = np.zeros((n, steps + 1))
    total_sig = np.zeros((n, steps + 1))
    cost_col = np.zeros((n, steps + 1))
    xhat = np.empty((n, steps + 1, nx))
    xhat[:, 0] = tables.x0_mean

    if spec.kind == "st":
        st = _st_decisions(tables, cost_vec, spec.max_search)
        gamma[:, : steps + 1] = st[None, :]
        ell = 0
        for k in range(1, steps + 1):
            prop = xhat[:, k - 1] @ tables.a_mats[k - 1].T
            fire = gamma[:, k].astype(bool)
            xhat[:, k] = np.where(fire[:, None], xhat_local[:, k], prop)
            var_sig[:, k] = tables.gap[ell, k]
            total_sig[:, k] = var_sig[:, k]
            cost_col[:, k] = cost_vec[k]
            if st[k]:
                ell = k
        return gamma[:, : steps + 1], xhat, mean_sig, var_sig, total_sig, cost_col

    # PT warm-up: decisions for targets 2..M are owed before any data
    # exists; they go through the measurement-independent branch.
    if spec.kind == "pt" and horizon >= 2:
        for t in range(2, min(horizon, top) + 1):
            stat = tables.gap[kappa, t]
            fire = stat >= cost_vec[t]
            gamma[:, t] = fire
            kappa = np.where(fire, t, kappa)

    for k in range(1, steps + 1):
        prop = xhat[:, k - 1] @ tables.a_mats[k - 1].T
        d = xhat_local[:, k] - prop
        if spec.kind == "et" or horizon == 0:
            # decide about k itself, then apply
            stat = (d * d).sum(axis=1)
            fire = stat >= cost_vec[k] if k > 1 else np.ones(n, dtype=bool)
            gamma[:, k] = fire
            kappa = np.where(fire, k, kappa)
            xhat[:, k] = np.where(fire[:, None], xhat_local[:, k], prop)
            mean_sig[:, k] = stat
            total_sig[:, k] = stat
            cost_col[:, k] = cost_vec[k]
            continue
        # PT with horizon >= 1: apply the committed decision for k, then
        # commit the decision for k + M.
        fire_now = gamma[:, k].astype(bool)
        xhat[:, k] = np.where(fire_now[:, None], xhat_local[:, k], prop)
        t = k + horizon
        past = kappa < k
        dphi = d @ tables.phi[k].T
        msig = (dphi * dphi).sum(axis=1)
        vpast = tables.gap[k, t]
        vfut = tables.gap[kappa, t]
        stat = np.where(past, msig + vpast, vfut)
        fire = stat >= cost_vec[t]
        gamma[:, t] = fire
        kappa = np.where(fire, t, kappa)
        mean_sig[:, k] = np.where(past, msig, 0.0)
        var_sig[:, k] = np.where(past, vpast, vfut)
        total_sig[:, k] = stat
        cost_col[:, k] = cost_vec[t]
    return gamma[:, : steps + 1], xhat, mean_sig, var_sig, total_sig, cost_col


def _run_chunk(payload) -> list:
    """Evaluate one batch of runs for every cost in the grid.

    Top-level function so process pools can pickle it. Returns, per cost,
    a (err, comm) pair of per-run arrays ordered by run index.
    """
    model, prior, tables, kind, horizon, max_search, costs, steps, seed, lo, hi = payload
    streams = [RngStream(seed, i) for i in range(lo, hi)]
    xs, ys = simulate_trajectories(model, prior, steps, streams)
    xhat_local = _local_means(tables, ys)
    out = []
    for cost in costs:
        spec = TriggerSpec(kind=kind, cost=cost, horizon=horizon, max_search=max_search)
        cost_vec = cost.at_array(tables.top)
        gamma, xhat, *_ = _decision_pass(tables, spec, cost_vec, xhat_local)
        err = ((xs[:, 1:] - xhat[:, 1:]) ** 2).sum(axis=2).mean(axis=1)
        comm = gamma[:, 1:].mean(axis=1)
        for arr, name in ((err, "error"), (comm, "communication")):
            if not np.all(np.isfinite(arr)):
                bad = lo + int(np.argmax(~np.isfinite(arr)))
                raise RuntimeError(
                    f"run {bad} (seed {seed}, stream {bad}) produced non-finite {name}"
                )
        out.append((err, comm))
    return out


def _evaluate_costs(
    model: LinearGaussianModel,
    prior: Prior,
    kind: str,
    costs: list[CostSchedule],
    steps: int,
    n_runs: int,
    seed: int,
    horizon: int = 0,
    max_search: int = 10_000,
    workers: int = 1,
) -> list[tuple[np.ndarray, np.ndarray]]:
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    tables = _build_tables(model, prior, steps, horizon if kind == "pt" else 0)
    payloads = [
        (model, prior, tables, kind, horizon, max_search, costs, steps, seed, lo,
         min(lo + _CHUNK, n_runs))
        for lo in range(0, n_runs, _CHUNK)
    ]
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(_run_chunk, payloads))
    else:
        chunk_results = [_run_chunk(p) for p in payloads]
    # ordered fold by run index, independent of execution order
    out = []
    for ci in range(len(costs)):
        err = np.concatenate([cr[ci][0] for cr in chunk_results])
        comm = np.concatenate([cr[ci][1] for cr in chunk_results])
        out.append((err, comm))
    return out


def run_closed_loop(
    model: LinearGaussianModel,
    prior: Prior,
    spec: TriggerSpec,
    steps: int,
    rng: RngStream,
) -> SimulationTrace:
    """One closed-loop realization of sensor, trigger, and remote estimator."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    tables = _build_tables(
        model, prior, steps, spec.horizon if spec.kind == "pt" else 0
    )
    xs, ys = simulate_trajectories(model, prior, steps, [rng])
    xhat_local = _local_means(tables, ys)
    cost_vec = spec.cost.at_array(tables.top)
    gamma, xhat, mean_sig, var_sig, total_sig, cost_col = _decision_pass(
        tables, spec, cost_vec, xhat_local
    )
    return SimulationTrace(
        kind=spec.kind,
        x=xs[0, 1:], y=ys[0, 1:],
        xhat_local=xhat_local[0, 1:], xhat_remote=xhat[0, 1:],
        gamma=gamma[0, 1:].astype(int),
        mean_sig=mean_sig[0, 1:], var_sig=var_sig[0, 1:],
        total_sig=total_sig[0, 1:], cost=cost_col[0, 1:],
    )


def run_metrics(trace: SimulationTrace) -> RunMetrics:
    err = float((trace.remote_error**2).sum(axis=1).mean())
    comm = float(trace.gamma.mean())
    return RunMetrics(err=err, comm=comm)


def _aggregate(
    kind: str, horizon: int, cost_value: float, steps: int, n_runs: int, seed: int,
    err: np.ndarray, comm: np.ndarray,
) -> TradeoffPoint:
    err_std = float(np.std(err, ddof=1)) if n_runs > 1 else 0.0
    return TradeoffPoint(
        trigger=kind, horizon=horizon, cost=cost_value, n_runs=n_runs,
        steps=steps, seed=seed,
        comm_mean=float(np.mean(comm)), err_mean=float(np.mean(err)),
        err_std=err_std,
    )


def monte_carlo(
    model: LinearGaussianModel,
    prior: Prior,
    spec: TriggerSpec,
    steps: int,
    n_runs: int,
    seed: int,
    workers: int = 1,
) -> TradeoffPoint:
    """Aggregate independent closed-loop runs on streams (seed, run index)."""
    results = _evaluate_costs(
        model, prior, spec.kind, [spec.cost], steps, n_runs, seed,
        horizon=spec.horizon, max_search=spec.max_search, workers=workers,
    )
    err, comm = results[0]
    cost_value = spec.cost.constant if spec.cost.constant is not None else math.nan
    return _aggregate(
        spec.kind, spec.horizon, cost_value, steps, n_runs, seed, err, comm
    )


def sweep(
    model: LinearGaussianModel,
    prior: Prior,
    kind: str,
    cost_grid,
    steps: int,
    n_runs: int,
    seed: int,
    horizon: int = 0,
    max_search: int = 10_000,
    workers: int = 1,
) -> list[TradeoffPoint]:
    """One trade-off point per cost, on paired noise across the whole grid."""
    grid = [float(c) for c in cost_grid]
    if not grid:
        raise ValueError("cost grid must be nonempty")
    costs = [CostSchedule(constant=c) for c in grid]
    results = _evaluate_costs(
        model, prior, kind, costs, steps, n_runs, seed,
        horizon=horizon, max_search=max_search, workers=workers,
    )
    return [
        _aggregate(kind, horizon, c, steps, n_runs, seed, err, comm)
        for c, (err, comm) in zip(grid, results)
    ]


def detect_period(gamma, transient: int = TRANSIENT_STEPS) -> int | None:
    """Smallest shift p with gamma[k + p] = gamma[k] after the transient."""
    seq = np.asarray(gamma)[transient:]
    for p in range(1, seq.size):
        if np.array_equal(seq[p:], seq[:-p]):
            return p
    return None


def determinism_metric(traces, transient: int = TRANSIENT_STEPS) -> float:
    """Fraction of trace pairs with identical post-transient decisions."""
    if len(traces) < 2:
        raise ValueError("need at least two traces")
    seqs = [np.asarray(t.gamma)[transient:] for t in traces]
    length = seqs[0].size
    if any(s.size != length for s in seqs):
        raise ValueError("traces have mismatched lengths")
    same = 0
    total = 0
    for i in range(len(seqs)):
        for j in range(i + 1, len(seqs)):
            total += 1
            same += int(np.array_equal(seqs[i], seqs[j]))
    return same / total


def _fmt(v) -> str:
    return format(float(v), ".17g")


def trace_csv(trace: SimulationTrace) -> str:
    """Trace as CSV; floats carry 17 significant digits."""
    nx = trace.x.shape[1]
    ny = trace.y.shape[1]
    header = (
        ["k"]
        + [f"x{i}" for i in range(nx)]
        + [f"y{i}" for i in range(ny)]
        + [f"xhatF{i}" for i in range(nx)]
        + [f"xhat{i}" for i in range(nx)]
        + ["gamma", "Emean", "Evar", "E", "cost"]
    )
    lines = [",".join(header)]
    for i in range(trace.horizon):
        row = (
            [str(i + 1)]
            + [_fmt(v) for v in trace.x[i]]
            + [_fmt(v) for v in trace.y[i]]
            + [_fmt(v) for v in trace.xhat_local[i]]
            + [_fmt(v) for v in trace.xhat_remote[i]]
            + [str(int(trace.gamma[i]))]
            + [_fmt(trace.mean_sig[i]), _fmt(trace.var_sig[i]),
               _fmt(trace.total_sig[i]), _fmt(trace.cost[i])]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def sweep_csv(points: list[TradeoffPoint]) -> str:
    header = "trigger,M,C,runs,K,seed,comm_mean,err_mean,err_std"
    lines = [header]
    for p in points:
        lines.append(
            ",".join(
                [p.trigger, str(p.horizon), _fmt(p.cost), str(p.n_runs),
                 str(p.steps), str(p.seed),
                 _fmt(p.comm_mean), _fmt(p.err_mean), _fmt(p.err_std)]
            )
        )
    return "\n".join(lines) + "\n"


def period_csv(pairs: list[tuple[float, int | None]]) -> str:
    """(cost, period) rows; a missing finite period is rendered as -1."""
    lines = ["C,M"]
    for c, m in pairs:
        lines.append(f"{_fmt(c)},{m if m is not None else -1}")
    return "\n".join(lines) + "\n"
