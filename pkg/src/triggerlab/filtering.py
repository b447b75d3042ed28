"""Local full-information Kalman filter and the remote estimator.

The sensor-side filter sees every measurement and runs regardless of the
triggering policy: the payload transmitted at a trigger is always the
current posterior mean. The remote side either copies that payload
(transmission) or propagates its previous estimate through the dynamics
(no transmission); absence of a transmission carries no information here.

Covariances evolve independently of the measurement data, so the whole
prior/posterior covariance sequence (and the gains) can be tabulated once
per model with `variance_schedule` and shared by every run.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .model import LinearGaussianModel, Prior, transition_product


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class FilterState:
    """Posterior at time k together with the prior and gain that produced it."""

    k: int
    mean: np.ndarray        # posterior mean at k
    cov: np.ndarray         # posterior covariance at k
    prior_mean: np.ndarray  # predicted mean at k given data to k-1
    prior_cov: np.ndarray
    gain: np.ndarray | None

    @property
    def posterior(self) -> GaussianBelief:
        return GaussianBelief(self.mean, self.cov)


@dataclass(frozen=True)
class RemoteState:
    """Remote estimate at time k and the last time a payload arrived."""

    k: int
    mean: np.ndarray
    last_transmit: int

    def __post_init__(self):
        if self.last_transmit > self.k:
            raise ValueError("remote state: last transmit cannot lie in the future")


def initial_filter_state(prior: Prior) -> FilterState:
    return FilterState(
        k=0, mean=prior.mean.copy(), cov=prior.cov.copy(),
        prior_mean=prior.mean.copy(), prior_cov=prior.cov.copy(), gain=None,
    )


def initial_remote_state(prior: Prior) -> RemoteState:
    return RemoteState(k=0, mean=prior.mean.copy(), last_transmit=0)


def kf_predict(state: FilterState, model: LinearGaussianModel) -> GaussianBelief:
    """One-step prediction: mean A x, covariance A P A^T + Q, symmetrized."""
    a = model.a(state.k)
    q = model.q(state.k)
    mean = a @ state.mean
    cov = linalg.symmetrize(a @ state.cov @ a.T + q)
    return GaussianBelief(mean, cov)


def kf_update(
    prior: GaussianBelief, y, model: LinearGaussianModel, k: int
) -> FilterState:
    """Measurement update at time k from the predicted belief.

    The gain solves (H P- H^T + R) L^T = H P-^T instead of forming an
    inverse; a near-singular innovation covariance is rejected.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    h = model.h(k)
    r = model.r(k)
    innov_cov = h @ prior.cov @ h.T + r
    gain = linalg.solve_symmetric(innov_cov, h @ prior.cov.T).T
    mean = prior.mean + gain @ (y - h @ prior.mean)
    cov = linalg.symmetrize((np.eye(model.nx) - gain @ h) @ prior.cov)
    return FilterState(
        k=k, mean=mean, cov=cov,
        prior_mean=prior.mean, prior_cov=prior.cov, gain=gain,
    )


def filter_step(state: FilterState, y, model: LinearGaussianModel) -> FilterState:
    """Predict from time k to k+1 and update with y_{k+1}."""
    return kf_update(kf_predict(state, model), y, model, state.k + 1)


def open_loop_cov(
    model: LinearGaussianModel, cov: np.ndarray, k: int, steps: int
) -> np.ndarray:
    """Apply the prediction-only covariance map `steps` times starting at k."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    out = cov
    for j in range(steps):
        a = model.a(k + j)
        out = linalg.symmetrize(a @ out @ a.T + model.q(k + j))
    return out


def predict_m_steps(
    state: FilterState, model: LinearGaussianModel, m: int
) -> GaussianBelief:
    """M-step open-loop prediction of the posterior; m = 0 is the identity."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    phi = transition_product(model, state.k, state.k + m - 1)
    return GaussianBelief(phi @ state.mean, open_loop_cov(model, state.cov, state.k, m))


@dataclass(frozen=True)
class CovarianceSchedule:
    """Deterministic covariance recursion for k = 0..horizon.

    prior_cov[k] and gains[k] are None at k = 0 (no update happens there);
    post_cov[0] is the prior covariance. Measurement-independent, hence
    computable offline and shareable across runs and threads.
    """

    horizon: int
    prior_cov: list
    post_cov: list
    gains: list

    def require(self, k: int):
        if k > self.horizon:
            raise ValueError(
                f"covariance schedule covers k <= {self.horizon}, need {k}"
            )


def posterior_cov_step(
    model: LinearGaussianModel, post_cov: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Covariance-only filter step from time k-1 to k.

    Returns (prior covariance at k, posterior covariance at k, gain at k).
    This is the single code path for the measurement-independent
    covariance recursion, so tabulated and on-the-fly values agree
    bitwise.
    """
    a = model.a(k - 1)
    prior_cov = linalg.symmetrize(a @ post_cov @ a.T + model.q(k - 1))
    h = model.h(k)
    innov_cov = h @ prior_cov @ h.T + model.r(k)
    gain = linalg.solve_symmetric(innov_cov, h @ prior_cov.T).T
    post = linalg.symmetrize((np.eye(model.nx) - gain @ h) @ prior_cov)
    return prior_cov, post, gain


def variance_schedule(
    model: LinearGaussianModel, prior: Prior, horizon: int
) -> CovarianceSchedule:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    prior_cov: list = [None]
    post_cov = [prior.cov.copy()]
    gains: list = [None]
    for k in range(1, horizon + 1):
        pc, post, gain = posterior_cov_step(model, post_cov[-1], k)
        prior_cov.append(pc)
        post_cov.append(post)
        gains.append(gain)
    return CovarianceSchedule(horizon, prior_cov, post_cov, gains)


def remote_step(
    state: RemoteState, gamma: int, payload, model: LinearGaussianModel
) -> RemoteState:
    """Advance the remote estimate to time k+1.

    gamma = 1 requires the local posterior mean as payload and resets the
    estimate to it; gamma = 0 requires no payload and propagates through
    the dynamics.
    """
    k = state.k + 1
    if gamma not in (0, 1):
        raise ValueError(f"gamma must be 0 or 1, got {gamma}")
    if gamma == 1:
        if payload is None:
            raise ValueError("gamma = 1 but no payload supplied")
        mean = np.asarray(payload, dtype=float).reshape(-1)
        return RemoteState(k=k, mean=mean, last_transmit=k)
    if payload is not None:
        raise ValueError("gamma = 0 but a payload was supplied")
    return RemoteState(
        k=k, mean=model.a(k - 1) @ state.mean, last_transmit=state.last_transmit
    )
