"""Fast runtime invariant checks behind ``crowdaoi selfcheck``."""

from __future__ import annotations

import numpy as np

from ..bounds import B_of_gamma, M_constant, pooled_queue_run, weighted_age_lower_bound
from ..core import Bernoulli, Discrete, PriceProcess, ProcessSpec
from ..metrics import age_drift_gap, compute_epsilon
from ..policies import SelfishLinear, make_policy
from ..simulation import simulate
from .presets import asymmetric_process, deterministic_process, symmetric_process


def _rr_optimal():
    res = simulate(deterministic_process(), PriceProcess(), make_policy("round_robin", n=10), 5_000, seed=0)
    return res.metrics.mean_max_age == 9.0, f"mean max age {res.metrics.mean_max_age}"


def _age_and_record():
    spec = asymmetric_process()
    res = simulate(spec, PriceProcess(), SelfishLinear(beta=0.3, gamma=0.5), 20_000, seed=3, record_trajectory=True)
    tr = res.trajectory
    t = np.arange(tr.horizon + 1)[:, None]
    age_ok = np.array_equal(tr.age, t - tr.last_update)
    rows = np.maximum(tr.last_update[1:-1] - 1, 0)
    held = np.take_along_axis(tr.price, rows, axis=0)
    rec_ok = np.array_equal(tr.record[1:-1], held)
    return age_ok and rec_ok, f"age reconstruction {age_ok}, record staleness {rec_ok}"


def _pooled_dominance():
    worst = np.inf
    rng = np.random.default_rng(7)
    for k in range(20):
        n = int(rng.integers(2, 6))
        spec = ProcessSpec(
            Discrete((0, 1, 2), tuple(rng.dirichlet(np.ones(3)))),
            tuple(Bernoulli(p=float(p)) for p in rng.uniform(0.1, 0.9, n)),
        )
        name = ["selfish", "greedy", "jsq", "max_age", "round_robin", "stationary"][k % 6]
        pol = make_policy(name, n=n, beta=float(rng.uniform(0, 2)), gamma=float(rng.uniform(0, 2)), mu=spec.mu)
        res = simulate(spec, PriceProcess(), pol, 2_000, seed=k, record_trajectory=True)
        phi = pooled_queue_run(spec, 2_000, k).phi
        worst = min(worst, int((res.trajectory.queue.sum(axis=1) - phi).min()))
    return worst >= 0, f"min(sum Q - Phi) = {worst}"


def _engines_agree():
    spec = symmetric_process()
    pol = lambda: SelfishLinear(beta=0.5, gamma=1.0)  # noqa: E731
    a = simulate(spec, PriceProcess(), pol(), 3_000, seed=11, engine="reference", record_trajectory=True)
    b = simulate(spec, PriceProcess(), pol(), 3_000, seed=11, engine="fast", record_trajectory=True)
    ok = all(np.array_equal(getattr(a.trajectory, f), getattr(b.trajectory, f)) for f in ("queue", "age", "record", "selected"))
    return ok, "reference and compiled trajectories identical" if ok else "trajectories differ"


def _constants():
    sym, asym = symmetric_process(), asymmetric_process()
    eps = compute_epsilon(sym)
    checks = [
        abs(eps - 1 / 9) < 1e-12,
        abs(compute_epsilon(asym) - 0.1) < 1e-12,
        abs(B_of_gamma(1.0, sym) - 1.9 / 1.8) < 1e-12,
        abs(M_constant(eps, sym)) < 1e-12,
        abs(weighted_age_lower_bound(sym) - 0.5 * (1 / 0.09 - 1)) < 1e-12,
    ]
    return all(checks), f"{sum(checks)}/{len(checks)} constants match"


def _argmax_shift():
    rng = np.random.default_rng(5)
    pol = SelfishLinear(beta=0.7, gamma=0.4, tie_break="lowest")
    for _ in range(200):
        age = rng.integers(0, 20, 6)
        queue = rng.integers(0, 5, 6)
        rec = rng.choice([0.25, 0.5, 0.75, 1.0], 6)
        c = float(rng.integers(-5, 5))
        if pol.select(age, queue, rec) != pol.select(age, queue, rec - c):
            return False, "selection changed under a common shift"
    return True, "200 random shifts"


def _drift():
    res = simulate(deterministic_process(), PriceProcess(), SelfishLinear(beta=0.2, gamma=0.0), 20_000, seed=2, record_trajectory=True)
    gap = age_drift_gap(res.trajectory, 0.2, 1.0)
    return gap.mean() <= 0, f"mean drift gap {gap.mean():.4f}"


CHECKS = [
    ("round-robin optimality", _rr_optimal),
    ("age reconstruction / record staleness", _age_and_record),
    ("pooled-queue dominance", _pooled_dominance),
    ("engine agreement", _engines_agree),
    ("closed-form constants", _constants),
    ("argmax shift invariance", _argmax_shift),
    ("age drift inequality", _drift),
]


def run_selfcheck(echo=print) -> bool:
    ok_all = True
    for name, fn in CHECKS:
        ok, detail = fn()
        ok_all &= bool(ok)
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all
