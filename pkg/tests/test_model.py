import numpy as np
import pytest

from triggerlab.model import (
    LinearGaussianModel,
    Prior,
    RngStream,
    simulate_trajectories,
    simulate_trajectory,
    transition_product,
)


def scalar_model(a=0.98):
    return LinearGaussianModel.lti([[a]], [[1.0]], [[0.1]], [[0.1]])


def scalar_prior():
    return Prior(mean=[1.0], cov=[[1.0]])


def test_rng_stream_reproducible():
    assert np.array_equal(
        RngStream(7, 3).standard_normal(5), RngStream(7, 3).standard_normal(5)
    )


def test_rng_streams_distinct():
    assert not np.array_equal(
        RngStream(7, 0).standard_normal(5), RngStream(7, 1).standard_normal(5)
    )


def test_rng_spawn_offsets_stream():
    assert np.array_equal(
        RngStream(7, 0).spawn(4).standard_normal(3),
        RngStream(7, 4).standard_normal(3),
    )


def test_model_dimensions_and_lti_flag():
    m = LinearGaussianModel.lti(np.eye(2), [[1.0, 0.0]], 0.1 * np.eye(2), [[0.2]])
    assert (m.nx, m.ny) == (2, 1)
    assert m.is_lti
    assert np.array_equal(m.h(5), [[1.0, 0.0]])


def test_time_varying_model():
    m = LinearGaussianModel(
        a=lambda k: np.array([[0.9 + 0.01 * k]]),
        h=[[1.0]], q=[[0.1]], r=[[0.1]],
    )
    assert not m.is_lti
    assert m.a(3)[0, 0] == pytest.approx(0.93)


def test_model_rejects_bad_shapes():
    with pytest.raises(ValueError):
        LinearGaussianModel.lti(np.eye(2), [[1.0, 0.0]], [[0.1]], [[0.1]])


def test_model_rejects_indefinite_noise():
    with pytest.raises(ValueError, match="indefinite"):
        LinearGaussianModel.lti([[1.0]], [[1.0]], [[-0.1]], [[0.1]])


def test_prior_validates_dimensions():
    with pytest.raises(ValueError, match="dimension"):
        Prior(mean=[1.0, 2.0], cov=[[1.0]])


def test_trajectory_accessors():
    traj = simulate_trajectory(scalar_model(), scalar_prior(), 10, RngStream(1, 0))
    assert traj.horizon == 10
    assert np.array_equal(traj.state(0), traj.x0)
    assert np.array_equal(traj.state(3), traj.states[2])
    assert np.array_equal(traj.measurement(1), traj.measurements[0])


def test_same_stream_same_trajectory():
    m, p = scalar_model(), scalar_prior()
    t1 = simulate_trajectory(m, p, 20, RngStream(5, 2))
    t2 = simulate_trajectory(m, p, 20, RngStream(5, 2))
    assert np.array_equal(t1.states, t2.states)
    assert np.array_equal(t1.measurements, t2.measurements)


def test_batching_does_not_change_runs():
    m, p = scalar_model(), scalar_prior()
    xs, ys = simulate_trajectories(m, p, 15, [RngStream(3, i) for i in range(4)])
    for i in range(4):
        single = simulate_trajectory(m, p, 15, RngStream(3, i))
        assert np.array_equal(xs[i, 1:, :], single.states)
        assert np.array_equal(ys[i, 1:, :], single.measurements)


def test_trajectory_moments():
    # x_1 = a x_0 + v_0 with x_0 ~ N(1, 1): mean a, variance a^2 + q
    m, p = scalar_model(), scalar_prior()
    xs, _ = simulate_trajectories(m, p, 1, [RngStream(0, i) for i in range(20000)])
    x1 = xs[:, 1, 0]
    assert x1.mean() == pytest.approx(0.98, abs=0.03)
    assert x1.var() == pytest.approx(0.98**2 + 0.1, abs=0.05)


def test_transition_product_identity_and_chain():
    m = LinearGaussianModel(
        a=lambda k: np.array([[float(k + 1)]]), h=[[1.0]], q=[[0.1]], r=[[0.1]]
    )
    assert np.array_equal(transition_product(m, 3, 2), np.eye(1))
    # A_4 A_3 = 5 * 4
    assert transition_product(m, 3, 4)[0, 0] == pytest.approx(20.0)
    with pytest.raises(ValueError):
        transition_product(m, 3, 1)


def test_simulate_rejects_bad_horizon():
    with pytest.raises(ValueError, match="horizon"):
        simulate_trajectory(scalar_model(), scalar_prior(), 0, RngStream(1, 0))
