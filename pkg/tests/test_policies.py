import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdaoi import (
    ConfigurationError,
    JoinShortestQueue,
    MaxAge,
    PriceGreedy,
    PriceProcess,
    RoundRobin,
    SelfishLinear,
    StationaryRandomized,
    make_policy,
    simulate,
)
from crowdaoi.policies import POLICY_NAMES, argmax_tie


def test_selfish_example_with_queues():
    pol = SelfishLinear(beta=1, gamma=1)
    age, queue, rec = np.array([5, 2]), np.array([0, 1]), np.array([0.5, 0.25])
    assert pol.scores(age, queue, rec).tolist() == [4.5, 0.75]
    assert pol.select(age, queue, rec) == 0


def test_selfish_example_deterministic_case():
    pol = SelfishLinear(beta=0.5, gamma=0.0)
    scores = pol.scores(np.array([0, 3]), np.zeros(2), np.array([0.999, 0.1]))
    assert scores.tolist() == pytest.approx([-0.999, 1.4])
    assert pol.select(np.array([0, 3]), np.zeros(2), np.array([0.999, 0.1])) == 1


def test_greedy_ignores_age():
    pol = PriceGreedy()
    assert pol.select(np.array([1000, 0]), np.zeros(2), np.array([0.999, 0.1])) == 1


def test_jsq_and_max_age():
    assert JoinShortestQueue().select(np.zeros(3), np.array([4, 1, 2]), np.zeros(3)) == 1
    assert MaxAge().select(np.array([4, 9, 2]), np.zeros(3), np.zeros(3)) == 1


def test_round_robin_cycle_and_pause_without_arrivals():
    rr = RoundRobin(n=3)
    z = np.zeros(3)
    assert [rr.select(z, z, z) for _ in range(7)] == [0, 1, 2, 0, 1, 2, 0]
    rr.reset()
    assert rr.select(z, z, z, active=False) == 0
    assert rr.select(z, z, z) == 0
    assert rr.select(z, z, z) == 1


def test_stationary_frequencies():
    mu = np.array([0.11] * 5 + [0.09] * 5)
    pol = StationaryRandomized.from_rates(mu)
    u = np.random.default_rng(11).random(1_000_000)
    picks = np.searchsorted(pol._cum, u, side="right")
    freq = np.bincount(np.minimum(picks, 9), minlength=10) / u.size
    assert np.all(np.abs(freq - mu / mu.sum()) < 0.005)
    # spot-check that select agrees with the vectorised lookup
    for x in u[:2000]:
        assert pol.select(None, None, None, u=x) == min(np.searchsorted(pol._cum, x, side="right"), 9)


def test_stationary_frequencies_through_simulation(asym):
    pol = make_policy("stationary", n=10, mu=asym.mu)
    tr = simulate(asym, PriceProcess(), pol, 200_000, seed=3, record_trajectory=True).trajectory
    freq = np.bincount(tr.selected, minlength=10) / tr.horizon
    assert np.all(np.abs(freq - asym.weights) < 0.005)


def test_random_tie_break_is_uniform():
    scores = np.array([1.0, 3.0, 3.0, 3.0])
    picks = [argmax_tie(scores, "random", u) for u in np.linspace(0, 1, 3000, endpoint=False)]
    counts = np.bincount(picks, minlength=4)
    assert counts[0] == 0 and counts[1] == counts[2] == counts[3] == 1000
    assert argmax_tie(scores, "lowest", 0.99) == 1


vec = st.lists(st.integers(0, 30), min_size=2, max_size=8)


@settings(max_examples=300, deadline=None)
@given(data=st.data(), beta=st.integers(0, 40).map(lambda k: k / 4), gamma=st.integers(0, 40).map(lambda k: k / 4), shift=st.integers(-50, 50), u=st.floats(0, 0.999))
def test_selection_invariant_under_common_shift(data, beta, gamma, shift, u):
    # dyadic weights keep every score exact, so ties survive the shift
    age = np.array(data.draw(vec))
    n = len(age)
    queue = np.array(data.draw(st.lists(st.integers(0, 30), min_size=n, max_size=n)))
    rec = np.array(data.draw(st.lists(st.sampled_from([0.25, 0.5, 0.75, 1.0]), min_size=n, max_size=n)))
    for pol in (SelfishLinear(beta=beta, gamma=gamma), PriceGreedy(gamma=gamma), JoinShortestQueue(), MaxAge()):
        base = pol.select(age, queue, rec, u=u)
        # a common shift of any observed coordinate moves every score equally
        k = abs(shift)
        assert pol.select(age, queue, rec + shift, u=u) == base
        assert pol.select(age + k, queue, rec, u=u) == base
        assert pol.select(age, queue + k, rec, u=u) == base


@settings(max_examples=200, deadline=None)
@given(data=st.data(), scale=st.sampled_from([0.5, 2.0, 4.0]))
def test_selfish_invariant_under_positive_scaling(data, scale):
    age = np.array(data.draw(vec))
    n = len(age)
    queue = np.array(data.draw(st.lists(st.integers(0, 30), min_size=n, max_size=n)))
    rec = np.array(data.draw(st.lists(st.sampled_from([0.25, 0.5, 0.75, 1.0]), min_size=n, max_size=n)))
    a = SelfishLinear(beta=1.0, gamma=0.5, tie_break="lowest").select(age, queue, rec)
    b = SelfishLinear(beta=scale, gamma=0.5 * scale, tie_break="lowest").select(age, queue, rec * scale)
    assert a == b


def test_gamma_irrelevant_when_queues_stay_empty(det10):
    runs = [
        simulate(det10, PriceProcess(), SelfishLinear(beta=0.3, gamma=g), 5000, seed=8, record_trajectory=True).trajectory.selected
        for g in (0.0, 1.0, 5.0)
    ]
    assert np.array_equal(runs[0], runs[1]) and np.array_equal(runs[0], runs[2])


def test_max_age_maximises_refreshed_age_each_slot(sym):
    tr = simulate(sym, PriceProcess(), MaxAge(), 5000, seed=2, record_trajectory=True).trajectory
    rows = np.arange(tr.horizon)
    assert np.array_equal(tr.age[rows, tr.selected], tr.age[:-1].max(axis=1))


@pytest.mark.parametrize("name", POLICY_NAMES)
def test_make_policy_builds_every_name(name):
    pol = make_policy(name, n=4, beta=1.0, gamma=1.0, mu=np.full(4, 0.25))
    assert pol.name == name


def test_make_policy_unknown_name():
    with pytest.raises(ConfigurationError, match="selfish"):
        make_policy("nope", n=2)


@pytest.mark.parametrize("kw", [dict(beta=-1.0), dict(gamma=-0.1), dict(tie_break="first")])
def test_selfish_rejects_bad_parameters(kw):
    with pytest.raises(ConfigurationError):
        SelfishLinear(**kw)
