"""Transmission triggering rules for remote estimation.

Three policies decide when the sensor sends its posterior mean to the
remote estimator, all built from one threshold structure: transmit when
the expected squared-error penalty of staying silent reaches the
communication cost.

- event trigger (ET): decides at time k about transmitting at k.
- predictive trigger (PT): decides at time k about time k + M, for a
  fixed horizon M >= 1 (horizon 0 reduces exactly to the ET).
- self trigger (ST): at a transmission instant, computes how many steps
  until the next one.

The threshold statistic splits into a measurement-dependent squared-bias
part (`mean_signal`) and a measurement-independent covariance-gap part
(`variance_signal`). ET and PT consume live data; ST depends only on the
covariance schedule and is therefore computable offline. Ties fire: the
comparison is >= throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .filtering import (
    CovarianceSchedule,
    FilterState,
    GaussianBelief,
    RemoteState,
    open_loop_cov,
    posterior_cov_step,
)
from .model import LinearGaussianModel, transition_product


@dataclass(frozen=True)
class CostSchedule:
    """Per-step communication cost C_k: a constant, or an explicit table."""

    constant: float | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if (self.constant is None) == (self.table is None):
            raise ValueError("cost schedule: give exactly one of constant, table")
        if self.constant is not None:
            c = float(self.constant)
            if not np.isfinite(c) or c < 0:
                raise ValueError(f"cost must be finite and >= 0, got {c}")
        else:
            t = np.asarray(self.table, dtype=float).reshape(-1)
            if t.size == 0 or not np.all(np.isfinite(t)) or np.any(t < 0):
                raise ValueError("cost table entries must be finite and >= 0")
            object.__setattr__(self, "table", t)

    def at(self, k: int) -> float:
        """Cost for a transmission at time k >= 1."""
        if k < 1:
            raise ValueError(f"cost index must be >= 1, got {k}")
        if self.constant is not None:
            return float(self.constant)
        if k > self.table.size:
            raise ValueError(f"cost table covers k <= {self.table.size}, need {k}")
        return float(self.table[k - 1])

    def at_array(self, horizon: int) -> np.ndarray:
        """Costs for k = 0..horizon as an array (index 0 unused, set to inf)."""
        out = np.empty(horizon + 1)
        out[0] = np.inf
        for k in range(1, horizon + 1):
            out[k] = self.at(k)
        return out


@dataclass(frozen=True)
class TriggerSpec:
    """Which trigger to run and with what parameters.

    `horizon` is the PT prediction horizon (ignored by ET/ST); horizon 0
    turns the PT into the ET and is allowed here for that reduction, while
    the user-facing configuration layer requires M >= 1. `max_search`
    caps the ST lookahead; exceeding it means no further transmission.
    """

    kind: str
    cost: CostSchedule
    horizon: int = 0
    max_search: int = 10_000

    def __post_init__(self):
        if self.kind not in ("et", "pt", "st"):
            raise ValueError(f"unknown trigger kind {self.kind!r}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if self.max_search < 1:
            raise ValueError(f"max_search must be >= 1, got {self.max_search}")


@dataclass
class DecisionLedger:
    """Committed transmission decisions, indexed by time.

    PT commits decisions ahead of execution; the ledger tracks the
    committed prefix (`frontier`), the last committed positive decision
    (`kappa`), and the last executed transmission (`last_transmit`).
    """

    decisions: list = field(default_factory=lambda: [0])  # index 0 unused

    @property
    def frontier(self) -> int:
        return len(self.decisions) - 1

    def commit(self, t: int, bit: int) -> None:
        if t != self.frontier + 1:
            raise ValueError(
                f"ledger commits must be contiguous: frontier {self.frontier}, got {t}"
            )
        if bit not in (0, 1):
            raise ValueError(f"decision must be 0 or 1, got {bit}")
        self.decisions.append(bit)

    def decision(self, t: int) -> int:
        if t > self.frontier:
            raise ValueError(f"decision for t={t} not committed (frontier {self.frontier})")
        return self.decisions[t]

    def kappa(self) -> int:
        """Index of the last committed positive decision."""
        for t in range(self.frontier, 0, -1):
            if self.decisions[t]:
                return t
        raise ValueError("ledger holds no positive decision yet")

    def last_transmit(self, k: int) -> int:
        """Last executed transmission at or before time k."""
        if k > self.frontier:
            raise ValueError(f"ledger frontier {self.frontier} does not cover k={k}")
        for t in range(k, 0, -1):
            if self.decisions[t]:
                return t
        raise ValueError("no transmission executed yet")


def mean_signal(
    k: int,
    m: int,
    filt: FilterState,
    remote: RemoteState,
    model: LinearGaussianModel,
) -> float:
    """Squared-bias part of the trigger statistic.

    `remote` must hold the no-transmission estimate at time k (the
    previous estimate propagated through the dynamics). The signal is the
    squared norm of the local/remote disagreement pushed M steps forward.
    M = 0 gives the event-trigger statistic.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if filt.k != k or remote.k != k:
        raise ValueError(
            f"mean_signal at k={k}: filter at {filt.k}, remote at {remote.k}"
        )
    phi = transition_product(model, k, k + m - 1)
    d = phi @ (filt.mean - remote.mean)
    return float(d @ d)


def variance_signal(
    k: int,
    m: int,
    schedule: CovarianceSchedule,
    post_cov_k: np.ndarray,
    model: LinearGaussianModel,
) -> float:
    """Covariance-gap part of the trigger statistic.

    trace of (M-step open-loop propagation of the posterior covariance at
    k) minus (posterior covariance at k + M). Nonnegative because an
    update never increases the trace; tiny negative round-off is clamped.
    """
    schedule.require(k + m)
    ol = open_loop_cov(model, post_cov_k, k, m)
    gap = float(np.trace(ol) - np.trace(schedule.post_cov[k + m]))
    scale = max(abs(float(np.trace(ol))), 1.0)
    if gap < -1e-9 * scale:
        raise ValueError(f"variance signal negative beyond round-off: {gap:.3e}")
    return max(gap, 0.0)


def error_without_update(
    k: int,
    m: int,
    filt: FilterState,
    remote: RemoteState,
    ledger: DecisionLedger,
    model: LinearGaussianModel,
    schedule: CovarianceSchedule,
) -> GaussianBelief:
    """Distribution of the remote error at k + M if no payload arrives there.

    Conditioned on the data seen through k. Two regimes: if the last
    committed positive decision lies in the past (kappa < k), the remote
    runs open loop from the last transmission and the error keeps the
    local/remote bias; if a transmission is scheduled now or in the future
    (kappa >= k), the error resets there and only covariance growth from
    that point matters, independent of the data.

    `remote` must hold the no-transmission estimate at time k, as in
    `mean_signal`.
    """
    if ledger.frontier < k + m - 1:
        raise ValueError(
            f"ledger frontier {ledger.frontier} does not cover {k + m - 1}"
        )
    kappa = ledger.kappa()
    if k > kappa:
        phi = transition_product(model, k, k + m - 1)
        mean = phi @ (filt.mean - remote.mean)
        cov = open_loop_cov(model, filt.cov, k, m)
        return GaussianBelief(mean, cov)
    schedule.require(k + m)
    delta = k + m - kappa
    cov = open_loop_cov(model, schedule.post_cov[kappa], kappa, delta)
    return GaussianBelief(np.zeros(model.nx), cov)


def error_with_update(
    k: int, m: int, schedule: CovarianceSchedule
) -> GaussianBelief:
    """Distribution of the remote error at k + M if a payload arrives there.

    Receiving the local posterior mean makes the remote error the local
    filter error, whose distribution is data-independent: zero mean with
    the scheduled posterior covariance.
    """
    schedule.require(k + m)
    nx = schedule.post_cov[k + m].shape[0]
    return GaussianBelief(np.zeros(nx), schedule.post_cov[k + m])


def event_trigger(
    k: int, filt: FilterState, remote: RemoteState, cost: CostSchedule
) -> int:
    """Decide transmission at time k from the current disagreement.

    `remote` holds the no-transmission estimate at k. Fires (returns 1)
    when the squared local/remote disagreement reaches C_k; ties fire.
    """
    if filt.k != k or remote.k != k:
        raise ValueError(
            f"event_trigger at k={k}: filter at {filt.k}, remote at {remote.k}"
        )
    d = filt.mean - remote.mean
    return int(float(d @ d) >= cost.at(k))


def predictive_trigger(
    k: int,
    m: int,
    filt: FilterState,
    remote: RemoteState,
    ledger: DecisionLedger,
    cost: CostSchedule,
    schedule: CovarianceSchedule,
    model: LinearGaussianModel,
) -> int:
    """Decide the transmission at time k + M and commit it to the ledger.

    With the last committed trigger in the past, the statistic is the
    squared-bias signal plus the covariance gap from the current time.
    With a trigger scheduled now or later (kappa >= k), the error resets
    at kappa, so only the covariance gap from kappa matters and the
    decision is measurement independent.
    """
    target = k + m
    if ledger.frontier != target - 1:
        raise ValueError(
            f"ledger frontier {ledger.frontier} must equal {target - 1} "
            f"to decide time {target}"
        )
    kappa = ledger.kappa()
    if k > kappa:
        stat = mean_signal(k, m, filt, remote, model) + variance_signal(
            k, m, schedule, filt.cov, model
        )
    else:
        delta = target - kappa
        stat = variance_signal(kappa, delta, schedule, schedule.post_cov[kappa], model)
    bit = int(stat >= cost.at(target))
    ledger.commit(target, bit)
    return bit


def self_trigger(
    ell: int,
    model: LinearGaussianModel,
    schedule: CovarianceSchedule,
    cost: CostSchedule,
    max_search: int = 10_000,
) -> int | None:
    """Steps from the transmission at time ell until the next one.

    Returns the smallest M >= 1 whose covariance gap reaches the cost, or
    None when no M <= max_search qualifies (a stable plant has a bounded
    gap, so a large cost may never trigger). The posterior recursion is
    continued past the schedule horizon as needed.
    """
    schedule.require(ell)
    p_open = schedule.post_cov[ell]
    p_post = schedule.post_cov[ell]
    for m in range(1, max_search + 1):
        t = ell + m
        a = model.a(t - 1)
        p_open = linalg.symmetrize(a @ p_open @ a.T + model.q(t - 1))
        if t <= schedule.horizon:
            p_post = schedule.post_cov[t]
        else:
            p_post = posterior_cov_step(model, p_post, t)[1]
        gap = float(np.trace(p_open) - np.trace(p_post))
        if gap >= cost.at(t):
            return m
    return None


def steady_state_posterior(
    model: LinearGaussianModel, tol: float = 1e-12, max_iter: int = 10**6
) -> np.ndarray:
    """Fixed point of the predict-plus-update covariance map (LTI models).

    Iterates until the Frobenius norm of the change drops below `tol`.
    Non-convergence within `max_iter` raises.
    """
    if not model.is_lti:
        raise ValueError("steady-state analysis requires a time-invariant model")
    p = np.zeros((model.nx, model.nx))
    for _ in range(max_iter):
        nxt = posterior_cov_step(model, p, 1)[1]
        if np.linalg.norm(nxt - p, "fro") < tol:
            return nxt
        p = nxt
    raise RuntimeError(
        f"posterior covariance iteration did not converge within {max_iter} steps"
    )


def steady_state_period(
    model: LinearGaussianModel, c: float, max_search: int = 10_000
) -> int | None:
    """Asymptotic self-trigger period for an LTI model at constant cost.

    Smallest M with trace(M-step open-loop growth of the steady posterior
    minus the steady posterior) >= c, or None if no M <= max_search
    qualifies.
    """
    if not np.isfinite(c) or c < 0:
        raise ValueError(f"cost must be finite and >= 0, got {c}")
    p_bar = steady_state_posterior(model)
    base = float(np.trace(p_bar))
    p_open = p_bar
    a = model.a(0)
    q = model.q(0)
    for m in range(1, max_search + 1):
        p_open = linalg.symmetrize(a @ p_open @ a.T + q)
        if float(np.trace(p_open)) - base >= c:
            return m
    return None
