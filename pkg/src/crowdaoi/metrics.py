"""Time averages, the joint AoI/queue cost, PoA estimates and drift diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import ConfigurationError, ProcessSpec

log = logging.getLogger(__name__)


class InfeasibleError(ValueError):
    """Arrival rate is not below the total service rate."""


@dataclass
class RunMetrics:
    """Averages over slots ``warmup .. horizon-1`` of one run.

    The quantity averaged for slot t is the post-step state, i.e. the values
    the next slot's users will observe.
    """

    horizon: int
    warmup: int
    mean_queue: np.ndarray
    mean_age: np.ndarray
    mean_max_age: float
    weights: np.ndarray
    cost_params: tuple[float, float, float] | None = None
    accumulated_cost: float | None = None

    @property
    def n(self) -> int:
        return len(self.mean_queue)

    @property
    def weighted_mean_age(self) -> float:
        return float(np.dot(self.weights, self.mean_age))

    @property
    def mean_queue_sum(self) -> float:
        return float(self.mean_queue.sum())

    def cost(self, beta: float, gamma: float, epsilon: float) -> float:
        return cost_components(self.mean_queue, self.mean_age, self.weights, beta, gamma, epsilon)


def cost_components(mean_queue, mean_age, weights, beta, gamma, epsilon) -> float:
    n = len(mean_queue)
    return float(gamma * epsilon / n * np.sum(mean_queue) + beta * np.dot(weights, mean_age))


class MetricsAccumulator:
    """Running sums for one run, fed once per slot after ``step``."""

    def __init__(self, n: int, warmup: int, weights, cost_params: tuple[float, float, float] | None = None):
        self.n = n
        self.warmup = warmup
        self.weights = np.asarray(weights, dtype=float)
        self.cost_params = cost_params
        self.sum_queue = np.zeros(n, dtype=np.int64)
        self.sum_age = np.zeros(n, dtype=np.int64)
        self.sum_max_age = 0
        self.sum_cost = 0.0
        self.count = 0

    def accumulate(self, state, outcome=None) -> None:
        # state.slot is t+1 once slot t has been stepped
        if state.slot - 1 < self.warmup:
            return
        self.sum_queue += state.queue
        self.sum_age += state.age
        self.sum_max_age += int(state.age.max())
        if self.cost_params is not None:
            beta, gamma, eps = self.cost_params
            self.sum_cost += slot_cost(state.queue, state.age, self.weights, beta, gamma, eps)
        self.count += 1

    def finalize(self, horizon: int) -> RunMetrics:
        c = max(self.count, 1)
        return RunMetrics(
            horizon=horizon,
            warmup=self.warmup,
            mean_queue=self.sum_queue / c,
            mean_age=self.sum_age / c,
            mean_max_age=self.sum_max_age / c,
            weights=self.weights,
            cost_params=self.cost_params,
            accumulated_cost=None if self.cost_params is None else self.sum_cost / c,
        )


def slot_cost(queue, age, weights, beta, gamma, eps) -> float:
    # summation order mirrors the compiled engine
    n = len(queue)
    qs = 0.0
    ws = 0.0
    for j in range(n):
        qs += float(queue[j])
        ws += weights[j] * float(age[j])
    return gamma * eps / n * qs + beta * ws


def compute_epsilon(spec: ProcessSpec) -> float:
    """Largest eps with mu_n/lam >= mu_n/mu_sum + eps/N for every PoI."""
    lam, mu_sum = spec.lam, spec.mu_sum
    if lam >= mu_sum:
        raise InfeasibleError(f"no feasible epsilon: lambda={lam:g} >= mu_sum={mu_sum:g}")
    return spec.n * spec.mu_min * (1.0 / lam - 1.0 / mu_sum)


def cost_J(metrics: RunMetrics, beta: float, gamma: float, epsilon: float) -> float:
    return metrics.cost(beta, gamma, epsilon)


class PoAEstimate(NamedTuple):
    value: float
    raw: float
    clamped: bool

    def __float__(self) -> float:
        return self.value


def _clamp(raw: float, what: str) -> PoAEstimate:
    value = min(max(raw, 0.0), 1.0)
    clamped = value != raw
    if clamped:
        log.warning("%s PoA %.6g clamped to %.6g", what, raw, value)
    return PoAEstimate(value, raw, clamped)


def poa_deterministic(mean_max_age_selfish: float, n: int) -> PoAEstimate:
    """1 - (N-1)/mean_max_age; the optimum N-1 is Round-Robin's."""
    if mean_max_age_selfish <= 0:
        raise ValueError("mean max age must be positive")
    return _clamp(1.0 - (n - 1) / mean_max_age_selfish, "deterministic")


def poa_stochastic(j_selfish: float, j_lower: float) -> PoAEstimate:
    if j_selfish <= 0 or j_lower <= 0:
        raise ValueError("costs must be positive")
    return _clamp(1.0 - j_lower / j_selfish, "stochastic")


def j_lower(beta: float, gamma: float, epsilon: float, n: int, jsq_queue_sum: float, age_lb: float) -> float:
    """Optimal-cost proxy: JSQ queue term plus the analytical age bound."""
    return gamma * epsilon / n * jsq_queue_sum + beta * age_lb


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicationSummary:
    mean: float
    stderr: float
    count: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "ReplicationSummary":
        x = np.asarray(values, dtype=float)
        if x.size == 0:
            raise ValueError("no replications")
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
        return cls(float(x.mean()), se, int(x.size))


# ---------------------------------------------------------------------------
# Lyapunov drift diagnostics
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Pre-step observations for slots 0..T (row t is what slot t's users see)."""

    queue: np.ndarray  # (T+1, N)
    age: np.ndarray  # (T+1, N)
    record: np.ndarray  # (T+1, N)
    price: np.ndarray  # (T, N) prices in effect during slot t
    last_update: np.ndarray  # (T+1, N)
    arrivals: np.ndarray  # (T,)
    services: np.ndarray  # (T, N)
    selected: np.ndarray  # (T,)

    @property
    def horizon(self) -> int:
        return len(self.arrivals)


@dataclass
class DriftReport:
    which: str
    values: np.ndarray
    drift: np.ndarray
    mean_drift: float
    stderr: float = field(default=math.nan)


LYAPUNOV = ("V", "L", "V1", "V2")


def lyapunov_values(traj: Trajectory, which: str, *, spec: ProcessSpec | None = None, beta: float | None = None, gamma: float | None = None) -> np.ndarray:
    q = traj.queue.astype(float)
    a = traj.age.astype(float)
    if which == "V":
        return a.sum(axis=1)
    if spec is None and which != "V":
        raise ConfigurationError(f"{which} needs the process spec")
    if which == "L":
        if not beta:
            raise ValueError("L is undefined for beta = 0")
        return gamma / (2.0 * spec.lam * beta) * (q**2).sum(axis=1) + a.sum(axis=1) / spec.q
    if which == "V1":
        return a @ spec.mu
    if which == "V2":
        return (a**2) @ spec.mu
    raise ConfigurationError(f"unknown Lyapunov function {which!r}; choose from {LYAPUNOV}")


def drift_diagnostics(traj: Trajectory, which: str, **params) -> DriftReport:
    values = lyapunov_values(traj, which, **params)
    d = np.diff(values)
    se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan
    return DriftReport(which, values, d, float(d.mean()), se)


def age_drift_gap(traj: Trajectory, beta: float, p_max: float) -> np.ndarray:
    """Samples of dV[t] - (N - 1 - max_age[t] + p_max/beta); non-positive on average."""
    n = traj.age.shape[1]
    dv = np.diff(traj.age.sum(axis=1).astype(float))
    return dv - (n - 1 - traj.age[:-1].max(axis=1) + p_max / beta)


def queue_age_drift_gap(traj: Trajectory, spec: ProcessSpec, beta: float, gamma: float, epsilon: float, p_max: float, b_gamma: float) -> np.ndarray:
    """Samples of dL[t] minus its bound from the stochastic drift argument."""
    lv = lyapunov_values(traj, "L", spec=spec, beta=beta, gamma=gamma)
    q = traj.queue[:-1].astype(float)
    a = traj.age[:-1].astype(float)
    n = spec.n
    bound = (
        -gamma * epsilon / (n * beta) * q.sum(axis=1)
        - a @ spec.weights
        + b_gamma / beta
        + n / spec.q
        - 1.0
        + p_max / beta
    )
    return np.diff(lv) - bound


def age_growth_slope(traj: Trajectory, poi: int, n_slots: int | None = None) -> float:
    """Least-squares slope of one PoI's age over the first ``n_slots`` slots."""
    ages = traj.age[: (n_slots or traj.horizon), poi].astype(float)
    t = np.arange(len(ages), dtype=float)
    return float(np.polyfit(t, ages, 1)[0])
