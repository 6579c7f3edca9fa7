"""Run drivers.

``engine="reference"`` executes :func:`crowdaoi.core.step` slot by slot and is
the readable definition of the dynamics. ``engine="fast"`` runs the same
semantics in a numba kernel over pre-drawn input blocks; both consume the
same :class:`~crowdaoi.core.InputStream`, so they produce identical
trajectories for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import InputStream, PriceProcess, ProcessSpec, SystemState, step
from .metrics import MetricsAccumulator, RunMetrics, Trajectory
from .policies import GREEDY, JSQ, MAX_AGE, ROUND_ROBIN, SELFISH, STATIONARY, Policy, RoundRobin

ENGINES = ("fast", "reference")


@dataclass
class RunResult:
    metrics: RunMetrics
    final_state: SystemState
    trajectory: Trajectory | None = None


def default_warmup(horizon: int) -> int:
    return horizon // 10


def simulate(
    spec: ProcessSpec,
    prices: PriceProcess | None,
    policy: Policy,
    horizon: int,
    *,
    warmup: int | None = None,
    seed=0,
    engine: str = "fast",
    record_trajectory: bool = False,
    cost_params: tuple[float, float, float] | None = None,
) -> RunResult:
    """Simulate ``horizon`` slots from the cold-start state."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    warmup = default_warmup(horizon) if warmup is None else warmup
    if not 0 <= warmup < horizon:
        raise ValueError("need 0 <= warmup < horizon")
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}")
    policy.reset()
    stream = InputStream(spec, prices, seed)
    state = SystemState.initial(stream.initial_prices)
    traj = _empty_trajectory(horizon, spec.n) if record_trajectory else None
    if engine == "reference":
        metrics, state = _run_reference(stream, state, policy, horizon, warmup, spec.weights, cost_params, traj)
    else:
        metrics, state = _run_fast(stream, state, policy, horizon, warmup, spec.weights, cost_params, traj)
    if traj is not None:
        traj.queue[horizon] = state.queue
        traj.age[horizon] = state.age
        traj.record[horizon] = state.record
        traj.last_update[horizon] = state.last_update
    return RunResult(metrics, state, traj)


def _empty_trajectory(horizon: int, n: int) -> Trajectory:
    return Trajectory(
        queue=np.zeros((horizon + 1, n), dtype=np.int64),
        age=np.zeros((horizon + 1, n), dtype=np.int64),
        record=np.zeros((horizon + 1, n)),
        price=np.zeros((horizon, n)),
        last_update=np.zeros((horizon + 1, n), dtype=np.int64),
        arrivals=np.zeros(horizon, dtype=np.int64),
        services=np.zeros((horizon, n), dtype=np.int64),
        selected=np.zeros(horizon, dtype=np.int64),
    )


def _run_reference(stream, state, policy, horizon, warmup, weights, cost_params, traj):
    acc = MetricsAccumulator(state.n, warmup, weights, cost_params)
    for block in stream.blocks(horizon):
        for i in range(len(block)):
            t = block.start + i
            state.price = block.prices[i].copy()
            if traj is not None:
                traj.queue[t] = state.queue
                traj.age[t] = state.age
                traj.record[t] = state.record
                traj.last_update[t] = state.last_update
                traj.price[t] = state.price
                traj.arrivals[t] = block.arrivals[i]
                traj.services[t] = block.services[i]
            state, outcome = step(state, policy, int(block.arrivals[i]), block.services[i], float(block.tie[i]))
            if traj is not None:
                traj.selected[t] = outcome.selected
            acc.accumulate(state, outcome)
    return acc.finalize(horizon), state


def _run_fast(stream, state, policy, horizon, warmup, weights, cost_params, traj):
    n = state.n
    beta, gamma, cum = policy.kernel_params()
    tie_random = policy.tie_break == "random"
    cursor = np.array([policy.cursor if isinstance(policy, RoundRobin) else 0], dtype=np.int64)
    sums_q = np.zeros(n, dtype=np.int64)
    sums_age = np.zeros(n, dtype=np.int64)
    counters = np.zeros(2, dtype=np.int64)  # sum of max age, counted slots
    cost_sum = np.zeros(1)
    cost_on = cost_params is not None
    cb, cg, ce = cost_params if cost_on else (0.0, 0.0, 0.0)
    record = state.record.copy()
    queue = state.queue.copy()
    age = state.age.copy()
    last = state.last_update.copy()
    w = np.asarray(weights, dtype=np.float64)
    dummy_i = np.zeros((1, 1), dtype=np.int64)
    dummy_f = np.zeros((1, 1))
    price = state.price
    for block in stream.blocks(horizon):
        if traj is not None:
            sl = slice(block.start, block.start + len(block))
            traj.price[sl] = block.prices
            traj.arrivals[sl] = block.arrivals
            traj.services[sl] = block.services
            tq, ta, tr, tu, ts = traj.queue, traj.age, traj.record, traj.last_update, traj.selected
        else:
            tq, ta, tr, tu, ts = dummy_i, dummy_i, dummy_f, dummy_i, dummy_i[0]
        _kernel(
            block.arrivals, block.services, block.prices, block.tie, block.start, warmup,
            policy.code, beta, gamma, cum, tie_random, cursor,
            record, queue, age, last,
            w, cost_on, cb, cg, ce,
            sums_q, sums_age, counters, cost_sum,
            traj is not None, tq, ta, tr, tu, ts,
        )
        price = block.prices[-1]
    if isinstance(policy, RoundRobin):
        policy.cursor = int(cursor[0])
    c = max(int(counters[1]), 1)
    metrics = RunMetrics(
        horizon=horizon,
        warmup=warmup,
        mean_queue=sums_q / c,
        mean_age=sums_age / c,
        mean_max_age=int(counters[0]) / c,
        weights=w,
        cost_params=cost_params,
        accumulated_cost=float(cost_sum[0] / c) if cost_on else None,
    )
    final = SystemState(np.array(price, dtype=float), record, queue, age, last, horizon)
    return metrics, final


@njit(cache=True)
def _score(code, beta, gamma, a, q, r):
    if code == SELFISH:
        return beta * a - gamma * q - r
    if code == GREEDY:
        return (-gamma) * q - r
    if code == JSQ:
        return -q
    return a  # MAX_AGE


@njit(cache=True)
def _kernel(
    A, R, P, U, t0, warmup,
    code, beta, gamma, cum, tie_random, cursor,
    record, queue, age, last,
    weights, cost_on, cb, cg, ce,
    sums_q, sums_age, counters, cost_sum,
    traj_on, tq, ta, tr, tu, ts,
):
    n = queue.shape[0]
    for i in range(A.shape[0]):
        t = t0 + i
        a = A[i]
        u = U[i]
        if traj_on:
            for j in range(n):
                tq[t, j] = queue[j]
                ta[t, j] = age[j]
                tr[t, j] = record[j]
                tu[t, j] = last[j]
        if code == ROUND_ROBIN:
            chosen = cursor[0]
            if a > 0:
                cursor[0] = (cursor[0] + 1) % n
        elif code == STATIONARY:
            chosen = n - 1
            for j in range(n):
                if cum[j] > u:
                    chosen = j
                    break
        else:
            best = -np.inf
            count = 0
            for j in range(n):
                s = _score(code, beta, gamma, float(age[j]), float(queue[j]), record[j])
                if s > best:
                    best = s
                    count = 1
                elif s == best:
                    count += 1
            k = 0
            if tie_random and count > 1:
                k = int(u * count)
            chosen = 0
            for j in range(n):
                s = _score(code, beta, gamma, float(age[j]), float(queue[j]), record[j])
                if s == best:
                    if k == 0:
                        chosen = j
                        break
                    k -= 1
        if traj_on:
            ts[t] = chosen
        for j in range(n):
            inc = a if j == chosen else 0
            qn = queue[j] + inc - R[i, j]
            queue[j] = qn if qn > 0 else 0
            if j == chosen and a > 0:
                age[j] = 0
                record[j] = P[i, j]
                last[j] = t + 1
            else:
                age[j] += 1
        if t >= warmup:
            mx = age[0]
            for j in range(n):
                sums_q[j] += queue[j]
                sums_age[j] += age[j]
                if age[j] > mx:
                    mx = age[j]
            counters[0] += mx
            counters[1] += 1
            if cost_on:
                qs = 0.0
                ws = 0.0
                for j in range(n):
                    qs += float(queue[j])
                    ws += weights[j] * float(age[j])
                cost_sum[0] += cg * ce / n * qs + cb * ws
