"""Linear time-varying Gaussian plant and sensor.

State recursion x_k = A_{k-1} x_{k-1} + v_{k-1}, measurement
y_k = H_k x_k + w_k, with v ~ N(0, Q), w ~ N(0, R) and Gaussian prior on
x_0. Time convention: the prior lives at k = 0, measurements start at
k = 1.

Randomness comes from counter-based Philox streams keyed by
(seed, stream id), so any (seed, stream) pair reproduces the identical
draw sequence on every platform and under any scheduling. Noise draws are
consumed in a fixed order: x_0 first, then v_0, w_1, v_1, w_2, ...  This
ordering is load-bearing: it lets different triggering policies be
compared on bitwise-identical noise realizations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg


class RngStream:
    """Named, reproducible random stream.

    Two streams with the same (seed, stream) produce identical draws from
    scratch; distinct stream ids are statistically independent.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def standard_normal(self, shape=None) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def spawn(self, offset: int) -> "RngStream":
        """Fresh stream with a shifted id, for per-purpose substreams."""
        return RngStream(self.seed, self.stream + offset)


class LinearGaussianModel:
    """Plant/sensor matrices as total functions of the time index.

    Either all four matrices are constants (LTI, the common case) or
    callables k -> matrix. Accessors validate shape and, for Q/R, PSD-ness
    on every query.
    """

    def __init__(self, a, h, q, r):
        self._a, self._h, self._q, self._r = a, h, q, r
        self.is_lti = not any(callable(m) for m in (a, h, q, r))
        a0 = linalg.as_matrix(a(0) if callable(a) else a, "A")
        h0 = linalg.as_matrix(h(0) if callable(h) else h, "H")
        self.nx = a0.shape[0]
        self.ny = h0.shape[0]
        # fail fast on inconsistent declared dimensions
        self.a(0), self.h(0), self.q(0), self.r(0)
        if self.is_lti:
            self._lq = linalg.cholesky(self.q(0))
            self._lr = linalg.cholesky(self.r(0))

    @classmethod
    def lti(cls, a, h, q, r) -> "LinearGaussianModel":
        return cls(
            linalg.as_matrix(a, "A"),
            linalg.as_matrix(h, "H"),
            linalg.symmetrize(linalg.as_matrix(q, "Q")),
            linalg.symmetrize(linalg.as_matrix(r, "R")),
        )

    def _fetch(self, m, k: int, name: str, shape) -> np.ndarray:
        out = linalg.as_matrix(m(k) if callable(m) else m, name)
        if out.shape != shape:
            raise ValueError(f"{name}({k}): expected shape {shape}, got {out.shape}")
        return out

    def a(self, k: int) -> np.ndarray:
        return self._fetch(self._a, k, "A", (self.nx, self.nx))

    def h(self, k: int) -> np.ndarray:
        return self._fetch(self._h, k, "H", (self.ny, self.nx))

    def q(self, k: int) -> np.ndarray:
        return linalg.check_psd(self._fetch(self._q, k, "Q", (self.nx, self.nx)), "Q")

    def r(self, k: int) -> np.ndarray:
        return linalg.check_psd(self._fetch(self._r, k, "R", (self.ny, self.ny)), "R")

    def noise_factor_q(self, k: int) -> np.ndarray:
        return self._lq if self.is_lti else linalg.cholesky(self.q(k))

    def noise_factor_r(self, k: int) -> np.ndarray:
        return self._lr if self.is_lti else linalg.cholesky(self.r(k))


@dataclass(frozen=True)
class Prior:
    """Gaussian prior on the initial state x_0."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = linalg.symmetrize(linalg.as_matrix(self.cov, "X0"))
        if cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"prior: mean dimension {mean.shape[0]} != cov dimension {cov.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class Trajectory:
    """One realization: x_0 plus states and measurements for k = 1..K."""

    x0: np.ndarray
    states: np.ndarray        # (K, nx), row k-1 holds x_k
    measurements: np.ndarray  # (K, ny), row k-1 holds y_k

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    def state(self, k: int) -> np.ndarray:
        return self.x0 if k == 0 else self.states[k - 1]

    def measurement(self, k: int) -> np.ndarray:
        return self.measurements[k - 1]


def sample_gaussian(mean, cov, rng: RngStream) -> np.ndarray:
    """Draw mean + F z with z iid standard normal and F F^T = cov."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    factor = linalg.cholesky(cov)
    if factor.shape[0] != mean.shape[0]:
        raise ValueError(
            f"sample_gaussian: mean dim {mean.shape[0]} != cov dim {factor.shape[0]}"
        )
    z = rng.standard_normal(mean.shape[0])
    return mean + factor @ z


def simulate_trajectories(
    model: LinearGaussianModel,
    prior: Prior,
    horizon: int,
    streams: list[RngStream],
) -> tuple[np.ndarray, np.ndarray]:
    """Batch of independent realizations, one stream per run.

    Returns (xs, ys) with xs of shape (n, K+1, nx) where xs[:, k] = x_k
    (index 0 is x_0), and ys of shape (n, K+1, ny) where ys[:, k] = y_k
    for k >= 1 (row 0 is unused and zero). Each run consumes its stream in
    the documented order, so the result is independent of batching.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = len(streams)
    nx, ny = model.nx, model.ny
    lx0 = linalg.cholesky(prior.cov)
    z0 = np.empty((n, nx))
    zn = np.empty((n, horizon, nx + ny))
    for i, rng in enumerate(streams):
        z0[i] = rng.standard_normal(nx)
        zn[i] = rng.standard_normal((horizon, nx + ny))
    xs = np.zeros((n, horizon + 1, nx))
    ys = np.zeros((n, horizon + 1, ny))
    xs[:, 0] = prior.mean + z0 @ lx0.T
    for k in range(1, horizon + 1):
        a = model.a(k - 1)
        h = model.h(k)
        lq = model.noise_factor_q(k - 1)
        lr = model.noise_factor_r(k)
        v = zn[:, k - 1, :nx] @ lq.T
        w = zn[:, k - 1, nx:] @ lr.T
        xs[:, k] = xs[:, k - 1] @ a.T + v
        ys[:, k] = xs[:, k] @ h.T + w
    return xs, ys


def simulate_trajectory(
    model: LinearGaussianModel, prior: Prior, horizon: int, rng: RngStream
) -> Trajectory:
    """Single realization of states and measurements for k = 1..K."""
    xs, ys = simulate_trajectories(model, prior, horizon, [rng])
    return Trajectory(x0=xs[0, 0], states=xs[0, 1:], measurements=ys[0, 1:])


def transition_product(model: LinearGaussianModel, k1: int, k2: int) -> np.ndarray:
    """Product A_{k2} A_{k2-1} ... A_{k1}; identity when k2 = k1 - 1.

    The empty product convention makes zero-step state prediction a no-op.
    """
    if k2 < k1 - 1:
        raise ValueError(f"transition_product: k2={k2} < k1-1={k1 - 1}")
    out = np.eye(model.nx)
    for k in range(k1, k2 + 1):
        out = model.a(k) @ out
    return out
