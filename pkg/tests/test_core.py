from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdaoi import (
    Bernoulli,
    ConfigurationError,
    Deterministic,
    Discrete,
    InputStream,
    PriceProcess,
    ProcessSpec,
    SystemState,
    advance_price,
    make_policy,
    sample_slot_inputs,
    simulate,
    step,
)
from crowdaoi.policies import POLICY_NAMES, SelfishLinear

from . import oracles


class _Fixed:
    """Policy stub that always picks the same PoI."""

    def __init__(self, idx):
        self.idx = idx

    def select(self, age, queue, record, *, active=True, u=0.0):
        return self.idx


# -- distributions ----------------------------------------------------------


@pytest.mark.parametrize(
    "dist, exact",
    [
        (Bernoulli(p=0.3), oracles.bern(Fraction(3, 10))),
        (Deterministic(k=2), oracles.det(2)),
        (Discrete((0, 1, 3), (0.5, 0.25, 0.25)), [(0, Fraction(1, 2)), (1, Fraction(1, 4)), (3, Fraction(1, 4))]),
    ],
)
def test_moments_match_exact_enumeration(dist, exact):
    mean, second, var, pos = oracles.moments(exact)
    assert dist.mean == pytest.approx(float(mean), abs=1e-15)
    assert dist.second_moment == pytest.approx(float(second), abs=1e-15)
    assert dist.variance == pytest.approx(float(var), abs=1e-15)
    assert dist.prob_positive == pytest.approx(float(pos), abs=1e-15)


def test_bernoulli_moment_identities():
    b = Bernoulli(p=0.9)
    assert b.mean == b.second_moment == 0.9
    assert b.variance == pytest.approx(0.09)


@pytest.mark.parametrize("bad", [dict(values=(0, 1), probs=(0.5, 0.6)), dict(values=(-1, 1), probs=(0.5, 0.5))])
def test_discrete_rejects_invalid(bad):
    with pytest.raises((ConfigurationError, ValueError)):
        Discrete(**bad)


def test_bernoulli_rejects_out_of_range():
    with pytest.raises((ConfigurationError, ValueError)):
        Bernoulli(p=1.5)


def test_deterministic_one_arrival_every_slot():
    spec = ProcessSpec(Deterministic(k=1), (Deterministic(k=1),) * 3)
    block = InputStream(spec, None, 0).draw(1000)
    assert np.all(block.arrivals == 1)
    assert np.all(block.services == 1)


def test_bernoulli_arrival_fraction():
    spec = ProcessSpec(Bernoulli(p=0.9), (Bernoulli(p=0.5),) * 2)
    block = InputStream(spec, None, 4).draw(200_000)
    assert abs(block.arrivals.mean() - 0.9) < 0.005


def test_bernoulli_service_sample_mean():
    spec = ProcessSpec(Bernoulli(p=0.9), (Bernoulli(p=0.1),) * 10)
    services = InputStream(spec, None, 123).draw(1_000_000).services
    for j in range(10):
        assert abs(services[:, j].mean() - 0.1) < 0.001


def test_general_discrete_sampling_frequencies():
    d = Discrete((0, 1, 3), (0.2, 0.5, 0.3))
    x = d.sample(np.random.default_rng(0).random(400_000))
    for v, p in zip(d.values, d.probs):
        assert abs(np.mean(x == v) - p) < 0.004


def test_sample_slot_inputs_shapes():
    spec = ProcessSpec(Bernoulli(p=0.5), (Bernoulli(p=0.5),) * 4)
    a, r = sample_slot_inputs(spec, np.random.default_rng(1))
    assert a in (0, 1)
    assert r.shape == (4,) and set(r.tolist()) <= {0, 1}


def test_process_spec_derived_quantities(asym):
    assert asym.n == 10
    assert asym.lam == pytest.approx(0.9)
    assert asym.q == pytest.approx(0.9)
    assert asym.mu_sum == pytest.approx(1.0)
    assert asym.mu_max == pytest.approx(0.11)
    assert asym.mu_min == pytest.approx(0.09)
    assert asym.weights.sum() == pytest.approx(1.0)
    assert asym.mu_summary() == "0.11x5|0.09x5"


# -- price process ----------------------------------------------------------


def test_price_unchanged_inside_window():
    pp = PriceProcess()
    prices = np.array([0.25, 1.0])
    out = pp.advance(prices, 50, np.random.default_rng(0))
    assert np.array_equal(out, prices)


def test_price_change_uniform_over_other_values():
    pp = PriceProcess()
    rng = np.random.default_rng(0)
    draws = np.array([pp.advance(np.array([0.25]), 100, rng)[0] for _ in range(30_000)])
    assert 0.25 not in draws
    for v in (0.5, 0.75, 1.0):
        assert abs(np.mean(draws == v) - 1 / 3) < 0.015


def test_two_value_set_forces_complement():
    pp = PriceProcess(value_set=(0.1, 0.9))
    rng = np.random.default_rng(3)
    for _ in range(50):
        assert pp.advance(np.array([0.1]), 200, rng)[0] == 0.9


def test_single_value_set_errors_when_change_due():
    pp = PriceProcess(value_set=(0.5,))
    rng = np.random.default_rng(0)
    assert pp.advance(np.array([0.5]), 10, rng)[0] == 0.5
    with pytest.raises(ConfigurationError):
        pp.advance(np.array([0.5]), 100, rng)


def test_advance_price_on_state_keeps_other_fields():
    state = SystemState.initial([0.25, 0.5])
    state.slot = 100
    new = advance_price(PriceProcess(), state, np.random.default_rng(0))
    assert np.all(new.price != state.price)
    assert np.array_equal(new.record, state.record)


def test_price_path_changes_only_on_period_boundaries():
    spec = ProcessSpec(Bernoulli(p=0.9), (Bernoulli(p=0.5),) * 3)
    block = InputStream(spec, PriceProcess(change_period=7), 2).draw(500)
    changed = np.any(block.prices[1:] != block.prices[:-1], axis=1)
    slots = np.nonzero(changed)[0] + 1
    assert np.all(slots % 7 == 0)
    # every boundary moves every PoI since the new value must differ
    assert np.all(np.diff(block.prices[::7], axis=0) != 0)


def test_price_path_independent_of_chunking():
    spec = ProcessSpec(Bernoulli(p=0.9), (Bernoulli(p=0.5),) * 3)
    pp = PriceProcess(change_period=10)
    whole = InputStream(spec, pp, 9).draw(1000).prices
    s = InputStream(spec, pp, 9)
    parts = np.vstack([b.prices for b in s.blocks(1000, chunk=37)])
    assert np.array_equal(whole, parts)


def test_uniform_price_within_range():
    pp = PriceProcess(kind="uniform", change_period=1)
    spec = ProcessSpec(Deterministic(k=1), (Deterministic(k=1),) * 2)
    prices = InputStream(spec, pp, 0).draw(5000).prices
    assert prices.min() >= 0.0 and prices.max() <= 1.0
    assert np.all(prices[1:] != prices[:-1])


# -- one-slot dynamics --------------------------------------------------------


def _state(age, queue, record, price):
    s = SystemState.initial(price)
    s.age = np.array(age, dtype=np.int64)
    s.queue = np.array(queue, dtype=np.int64)
    s.record = np.array(record, dtype=float)
    s.slot = 10
    s.last_update = s.slot - s.age
    return s


def test_queue_joins_and_serves():
    s = _state([0, 0], [3, 0], [0.5, 0.5], [0.5, 0.5])
    new, _ = step(s, _Fixed(0), 2, np.array([1, 0]))
    assert new.queue[0] == 4


def test_queue_clamps_at_zero():
    s = _state([0, 0], [3, 0], [0.5, 0.5], [0.5, 0.5])
    new, _ = step(s, _Fixed(0), 1, np.array([0, 2]))
    assert new.queue[1] == 0


def test_age_both_branches_and_record_refresh():
    s = _state([5, 7], [0, 0], [0.1, 0.2], [0.8, 0.9])
    new, out = step(s, _Fixed(0), 1, np.array([0, 0]))
    assert new.age.tolist() == [0, 8]
    assert new.record[0] == 0.8 and new.record[1] == 0.2
    assert out.record_updated.tolist() == [True, False]


def test_no_arrival_means_no_refresh():
    s = _state([5, 7], [0, 0], [0.1, 0.2], [0.8, 0.9])
    new, out = step(s, _Fixed(0), 0, np.array([1, 1]))
    assert new.age.tolist() == [6, 8]
    assert new.record.tolist() == [0.1, 0.2]
    assert not out.record_updated.any()


def test_step_does_not_mutate_input():
    s = _state([5, 7], [2, 1], [0.1, 0.2], [0.8, 0.9])
    before = s.copy()
    step(s, _Fixed(1), 1, np.array([0, 0]))
    for f in ("age", "queue", "record", "last_update"):
        assert np.array_equal(getattr(s, f), getattr(before, f))


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(2, 5),
    data=st.data(),
)
def test_step_invariants(n, data):
    ints = st.lists(st.integers(0, 20), min_size=n, max_size=n)
    age = data.draw(ints)
    queue = data.draw(ints)
    a = data.draw(st.integers(0, 3))
    r = np.array(data.draw(ints))
    chosen = data.draw(st.integers(0, n - 1))
    s = _state(age, queue, [0.5] * n, [0.3] * n)
    new, _ = step(s, _Fixed(chosen), a, r)
    assert np.all(new.queue >= 0)
    assert np.all(new.age >= 0)
    assert np.array_equal(new.age, new.slot - new.last_update)
    expected = np.maximum(np.array(queue) + a * (np.arange(n) == chosen) - r, 0)
    assert np.array_equal(new.queue, expected)
    grew = np.array(age) + 1
    assert np.all((new.age == 0) | (new.age == grew))


# -- whole-run invariants -----------------------------------------------------


def _random_spec(rng):
    n = int(rng.integers(2, 6))
    arrival = Discrete((0, 1, 2), tuple(rng.dirichlet(np.ones(3))))
    services = tuple(Bernoulli(p=float(p)) for p in rng.uniform(0.05, 0.95, n))
    return ProcessSpec(arrival, services)


@pytest.mark.parametrize("case", range(6))
def test_age_reconstruction_and_record_staleness(case):
    rng = np.random.default_rng(100 + case)
    spec = _random_spec(rng)
    name = POLICY_NAMES[case % len(POLICY_NAMES)]
    pol = make_policy(name, n=spec.n, beta=float(rng.uniform(0, 3)), gamma=float(rng.uniform(0, 3)), mu=spec.mu)
    tr = simulate(spec, PriceProcess(change_period=13), pol, 3000, seed=case, record_trajectory=True).trajectory
    t = np.arange(tr.horizon + 1)[:, None]
    assert np.array_equal(tr.age, t - tr.last_update)
    assert np.all(tr.age >= 0) and np.all(tr.queue >= 0)
    # the record always equals the price at the slot of the last refresh
    rows = np.maximum(tr.last_update[1:] - 1, 0)
    held = np.take_along_axis(tr.price, rows, axis=0)
    assert np.array_equal(tr.record[1:], held)


def test_deterministic_queues_stay_empty(det10):
    pol = SelfishLinear(beta=0.3, gamma=1.0)
    tr = simulate(det10, PriceProcess(), pol, 2000, seed=0, record_trajectory=True).trajectory
    assert not tr.queue.any()


def test_same_seed_same_trajectory(sym):
    runs = [simulate(sym, PriceProcess(), SelfishLinear(beta=0.5, gamma=1.0), 5000, seed=42, record_trajectory=True) for _ in range(2)]
    for f in ("queue", "age", "record", "price", "selected"):
        assert np.array_equal(getattr(runs[0].trajectory, f), getattr(runs[1].trajectory, f))
    assert runs[0].metrics.mean_max_age == runs[1].metrics.mean_max_age


def test_different_seed_differs(sym):
    a = simulate(sym, PriceProcess(), SelfishLinear(beta=0.5, gamma=1.0), 5000, seed=1)
    b = simulate(sym, PriceProcess(), SelfishLinear(beta=0.5, gamma=1.0), 5000, seed=2)
    assert a.metrics.mean_queue_sum != b.metrics.mean_queue_sum


def test_exogenous_inputs_shared_across_policies(sym):
    a = simulate(sym, PriceProcess(), make_policy("jsq", n=10), 3000, seed=5, record_trajectory=True).trajectory
    b = simulate(sym, PriceProcess(), make_policy("max_age", n=10), 3000, seed=5, record_trajectory=True).trajectory
    assert np.array_equal(a.arrivals, b.arrivals)
    assert np.array_equal(a.services, b.services)
    assert np.array_equal(a.price, b.price)


def test_initial_state_cold_start():
    s = SystemState.initial([0.25, 0.75])
    assert s.record.tolist() == [0.25, 0.75]
    assert not s.age.any() and not s.queue.any() and not s.last_update.any()
