import numpy as np
import pytest

from triggerlab.filtering import (
    filter_step,
    initial_filter_state,
    variance_schedule,
)
from triggerlab.model import (
    LinearGaussianModel,
    Prior,
    RngStream,
    simulate_trajectory,
    transition_product,
)
from triggerlab.filtering import RemoteState
from triggerlab.triggers import (
    CostSchedule,
    DecisionLedger,
    TriggerSpec,
    error_with_update,
    error_without_update,
    event_trigger,
    mean_signal,
    predictive_trigger,
    self_trigger,
    steady_state_period,
    steady_state_posterior,
    variance_signal,
)


def scalar_model(a=0.98):
    return LinearGaussianModel.lti([[a]], [[1.0]], [[0.1]], [[0.1]])


def scalar_prior():
    return Prior(mean=[1.0], cov=[[1.0]])


def steady_oracle(a, q, r):
    """Positive root of a^2 P^2 + (q + r - a^2 r) P - q r = 0."""
    a2 = a * a
    b = q + r - a2 * r
    return (-b + np.sqrt(b * b + 4.0 * a2 * q * r)) / (2.0 * a2)


# --- cost schedule ---------------------------------------------------------

def test_cost_schedule_constant():
    c = CostSchedule(constant=0.4)
    assert c.at(1) == 0.4 and c.at(999) == 0.4
    arr = c.at_array(3)
    assert np.isinf(arr[0]) and np.all(arr[1:] == 0.4)


def test_cost_schedule_table():
    c = CostSchedule(table=[0.1, 0.2, 0.3])
    assert c.at(2) == 0.2
    with pytest.raises(ValueError, match="covers"):
        c.at(4)
    with pytest.raises(ValueError):
        c.at(0)


def test_cost_schedule_validation():
    with pytest.raises(ValueError, match="exactly one"):
        CostSchedule()
    with pytest.raises(ValueError, match="exactly one"):
        CostSchedule(constant=0.1, table=[0.1])
    with pytest.raises(ValueError):
        CostSchedule(constant=-1.0)
    with pytest.raises(ValueError):
        CostSchedule(table=[0.1, -0.2])


def test_trigger_spec_validation():
    cost = CostSchedule(constant=0.1)
    with pytest.raises(ValueError, match="kind"):
        TriggerSpec(kind="nope", cost=cost)
    with pytest.raises(ValueError, match="horizon"):
        TriggerSpec(kind="pt", cost=cost, horizon=-1)
    with pytest.raises(ValueError, match="max_search"):
        TriggerSpec(kind="st", cost=cost, max_search=0)


# --- decision ledger -------------------------------------------------------

def test_ledger_commit_and_queries():
    led = DecisionLedger()
    led.commit(1, 1)
    led.commit(2, 0)
    led.commit(3, 1)
    assert led.frontier == 3
    assert led.decision(2) == 0
    assert led.kappa() == 3
    assert led.last_transmit(2) == 1
    with pytest.raises(ValueError, match="contiguous"):
        led.commit(5, 1)
    with pytest.raises(ValueError):
        led.decision(4)
    with pytest.raises(ValueError):
        led.last_transmit(9)


def test_ledger_requires_positive_decision_for_kappa():
    led = DecisionLedger()
    led.commit(1, 0)
    with pytest.raises(ValueError, match="no positive"):
        led.kappa()


# --- signals ---------------------------------------------------------------

def run_filter(model, prior, steps, stream):
    traj = simulate_trajectory(model, prior, steps, stream)
    filt = initial_filter_state(prior)
    states = [filt]
    for k in range(1, steps + 1):
        filt = filter_step(filt, traj.measurement(k), model)
        states.append(filt)
    return states


def test_mean_signal_zero_horizon_is_squared_disagreement():
    model, prior = scalar_model(), scalar_prior()
    filt = run_filter(model, prior, 5, RngStream(1, 0))[5]
    remote = RemoteState(k=5, mean=np.array([0.3]), last_transmit=2)
    d = filt.mean[0] - 0.3
    assert mean_signal(5, 0, filt, remote, model) == pytest.approx(d * d, rel=1e-12)
    # pushed M steps ahead the disagreement scales by a^M
    expected = (0.98**2 * d) ** 2
    assert mean_signal(5, 2, filt, remote, model) == pytest.approx(expected, rel=1e-12)


def test_variance_signal_matches_direct_trace_difference():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 10)
    a2, q = 0.98**2, 0.1
    for k, m in [(1, 0), (3, 2), (5, 4)]:
        open_var = sched.post_cov[k][0, 0]
        for _ in range(m):
            open_var = a2 * open_var + q
        expected = open_var - sched.post_cov[k + m][0, 0]
        got = variance_signal(k, m, sched, sched.post_cov[k], model)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got >= 0.0


def test_variance_signal_zero_horizon_is_zero():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 4)
    assert variance_signal(2, 0, sched, sched.post_cov[2], model) == 0.0


# --- predicted error distributions ----------------------------------------

def test_error_without_update_past_branch():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 8)
    filt = run_filter(model, prior, 6, RngStream(3, 0))[6]
    remote = RemoteState(k=6, mean=np.array([0.1]), last_transmit=4)
    led = DecisionLedger()
    for t in range(1, 8):
        led.commit(t, 1 if t in (1, 4) else 0)
    belief = error_without_update(6, 2, filt, remote, led, model, sched)
    phi = transition_product(model, 6, 7)
    assert np.allclose(belief.mean, phi @ (filt.mean - remote.mean), atol=1e-15)
    a2, q = 0.98**2, 0.1
    expected_var = a2 * (a2 * filt.cov[0, 0] + q) + q
    assert belief.cov[0, 0] == pytest.approx(expected_var, abs=1e-14)


def test_error_without_update_future_branch_ignores_data():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 8)
    filt = run_filter(model, prior, 5, RngStream(3, 1))[5]
    remote = RemoteState(k=5, mean=np.array([9.9]), last_transmit=2)
    led = DecisionLedger()
    # transmission already committed for time 6 (the future)
    for t, bit in [(1, 1), (2, 0), (3, 0), (4, 0), (5, 0), (6, 1)]:
        led.commit(t, bit)
    belief = error_without_update(5, 2, filt, remote, led, model, sched)
    assert np.array_equal(belief.mean, np.zeros(1))
    a2, q = 0.98**2, 0.1
    expected_var = a2 * sched.post_cov[6][0, 0] + q
    assert belief.cov[0, 0] == pytest.approx(expected_var, abs=1e-14)


def test_error_with_update_is_scheduled_posterior():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 8)
    belief = error_with_update(5, 2, sched)
    assert np.array_equal(belief.mean, np.zeros(1))
    assert np.array_equal(belief.cov, sched.post_cov[7])


def test_error_without_update_requires_covering_ledger():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 8)
    filt = run_filter(model, prior, 5, RngStream(3, 2))[5]
    remote = RemoteState(k=5, mean=np.array([0.0]), last_transmit=1)
    led = DecisionLedger()
    led.commit(1, 1)
    with pytest.raises(ValueError, match="frontier"):
        error_without_update(5, 2, filt, remote, led, model, sched)


# --- event trigger ---------------------------------------------------------

def test_event_trigger_ties_fire():
    model, prior = scalar_model(), scalar_prior()
    filt = run_filter(model, prior, 3, RngStream(5, 0))[3]
    remote = RemoteState(k=3, mean=filt.mean - 0.5, last_transmit=1)
    exactly = CostSchedule(constant=0.25)
    assert event_trigger(3, filt, remote, exactly) == 1
    above = CostSchedule(constant=0.25 + 1e-12)
    assert event_trigger(3, filt, remote, above) == 0


def test_event_trigger_time_mismatch():
    model, prior = scalar_model(), scalar_prior()
    filt = run_filter(model, prior, 3, RngStream(5, 1))[3]
    remote = RemoteState(k=2, mean=np.array([0.0]), last_transmit=1)
    with pytest.raises(ValueError, match="filter at"):
        event_trigger(3, filt, remote, CostSchedule(constant=0.1))


# --- predictive trigger ----------------------------------------------------

def test_predictive_trigger_commits_and_enforces_frontier():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 10)
    filt = run_filter(model, prior, 4, RngStream(6, 0))[4]
    remote = RemoteState(k=4, mean=np.array([0.0]), last_transmit=1)
    led = DecisionLedger()
    for t, bit in [(1, 1), (2, 0), (3, 0), (4, 0), (5, 0)]:
        led.commit(t, bit)
    bit = predictive_trigger(4, 2, filt, remote, led, CostSchedule(constant=1e-6),
                             sched, model)
    assert bit == 1 and led.frontier == 6 and led.decision(6) == 1
    with pytest.raises(ValueError, match="frontier"):
        predictive_trigger(4, 2, filt, remote, led, CostSchedule(constant=0.1),
                           sched, model)


def test_predictive_trigger_future_branch_is_data_independent():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 10)
    cost = CostSchedule(constant=0.15)
    bits = []
    for stream in range(2):
        filt = run_filter(model, prior, 3, RngStream(7, stream))[3]
        remote = RemoteState(k=3, mean=filt.mean + 100.0, last_transmit=1)
        led = DecisionLedger()
        # transmission committed for time 4 >= k: future branch
        for t, bit in [(1, 1), (2, 0), (3, 0), (4, 1)]:
            led.commit(t, bit)
        bits.append(
            predictive_trigger(3, 2, filt, remote, led, cost, sched, model)
        )
    assert bits[0] == bits[1]


# --- self trigger and steady state ----------------------------------------

def test_self_trigger_chain_is_periodic():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 60)
    cost = CostSchedule(constant=0.6)
    ell, gaps = 1, []
    while ell < 50:
        m = self_trigger(ell, model, sched, cost)
        gaps.append(m)
        ell += m
    assert set(gaps) == {7}


def test_self_trigger_extends_past_schedule():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 3)
    m = self_trigger(1, model, sched, CostSchedule(constant=0.6))
    assert m == 7


def test_self_trigger_no_finite_trigger():
    model, prior = scalar_model(), scalar_prior()
    sched = variance_schedule(model, prior, 5)
    # stable plant: the gap is bounded, a huge cost never fires
    assert self_trigger(1, model, sched, CostSchedule(constant=1e9),
                        max_search=200) is None


def test_steady_state_posterior_against_quadratic_oracle():
    for a in (0.98, 1.1):
        p = steady_state_posterior(scalar_model(a))
        assert p[0, 0] == pytest.approx(steady_oracle(a, 0.1, 0.1), abs=1e-10)


def test_steady_state_posterior_requires_lti():
    m = LinearGaussianModel(a=lambda k: np.eye(1) * 0.9, h=[[1.0]],
                            q=[[0.1]], r=[[0.1]])
    with pytest.raises(ValueError, match="time-invariant"):
        steady_state_posterior(m)


def test_steady_state_period_against_brute_force():
    model = scalar_model()
    p_bar = steady_oracle(0.98, 0.1, 0.1)
    a2, q = 0.98**2, 0.1

    def oracle(c, cap=10_000):
        var = p_bar
        for m in range(1, cap + 1):
            var = a2 * var + q
            if var - p_bar >= c:
                return m
        return None

    for c in (0.05, 0.1, 0.15, 0.25, 0.6, 1.0, 2.0):
        assert steady_state_period(model, c) == oracle(c)
    assert steady_state_period(model, 1e9, max_search=500) is None
    with pytest.raises(ValueError):
        steady_state_period(model, -0.1)
