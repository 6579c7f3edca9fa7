"""Domain types and one-slot dynamics of the crowd-learning system.

All randomness in a run is exogenous to the users' choices: arrivals, service
capacities, the price path and a per-slot tie-breaking uniform are drawn from
independent streams before the policy ever looks at them. That lets the
reference ``step`` loop and the compiled engine consume identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Invalid model configuration."""


# ---------------------------------------------------------------------------
# Distributions over non-negative integers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discrete:
    """Bounded discrete distribution on non-negative integers."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) == 0 or len(self.values) != len(self.probs):
            raise ConfigurationError("discrete distribution needs matching values/probs")
        if any(int(v) != v or v < 0 for v in self.values):
            raise ConfigurationError(f"support must be non-negative integers: {self.values}")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-12):
            raise ConfigurationError(f"probabilities must be >= 0 and sum to 1: {self.probs}")
        if len(set(self.values)) != len(self.values):
            raise ConfigurationError("duplicate support points")
        order = sorted(range(len(self.values)), key=lambda i: self.values[i])
        object.__setattr__(self, "values", tuple(int(self.values[i]) for i in order))
        object.__setattr__(self, "probs", tuple(float(self.probs[i]) for i in order))

    @property
    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    @property
    def second_moment(self) -> float:
        return float(sum(v * v * p for v, p in zip(self.values, self.probs)))

    @property
    def variance(self) -> float:
        m = self.mean
        return float(sum((v - m) ** 2 * p for v, p in zip(self.values, self.probs)))

    @property
    def prob_positive(self) -> float:
        return float(sum(p for v, p in zip(self.values, self.probs) if v > 0))

    @property
    def max_value(self) -> int:
        return max(v for v, p in zip(self.values, self.probs) if p > 0)

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform of uniforms in [0, 1)."""
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, u, side="right")
        np.minimum(idx, len(self.values) - 1, out=idx)
        return np.asarray(self.values, dtype=np.int64)[idx]

    def describe(self) -> str:
        body = ", ".join(f"{v}:{p:.17g}" for v, p in zip(self.values, self.probs))
        return f"discrete({body})"


@dataclass(frozen=True)
class Deterministic(Discrete):
    values: tuple[int, ...] = field(init=False)
    probs: tuple[float, ...] = field(init=False)
    k: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", (int(self.k),))
        object.__setattr__(self, "probs", (1.0,))
        super().__post_init__()

    @property
    def mean(self) -> float:
        return float(self.k)

    @property
    def second_moment(self) -> float:
        return float(self.k * self.k)

    @property
    def variance(self) -> float:
        return 0.0

    def sample(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), self.k, dtype=np.int64)

    def describe(self) -> str:
        return f"deterministic({self.k})"


@dataclass(frozen=True)
class Bernoulli(Discrete):
    values: tuple[int, ...] = field(init=False)
    probs: tuple[float, ...] = field(init=False)
    p: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"Bernoulli p must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "values", (0, 1))
        object.__setattr__(self, "probs", (1.0 - self.p, self.p))
        super().__post_init__()

    @property
    def mean(self) -> float:
        return float(self.p)

    @property
    def second_moment(self) -> float:
        return float(self.p)

    @property
    def variance(self) -> float:
        return float(self.p * (1.0 - self.p))

    @property
    def prob_positive(self) -> float:
        return float(self.p)

    def sample(self, u: np.ndarray) -> np.ndarray:
        return (np.asarray(u) < self.p).astype(np.int64)

    def describe(self) -> str:
        return f"bernoulli({self.p:.17g})"


# ---------------------------------------------------------------------------
# Process description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProcessSpec:
    """Arrival distribution A[t] and per-PoI service distributions R_n[t]."""

    arrival: Discrete
    services: tuple[Discrete, ...]
    r_max: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "services", tuple(self.services))
        if not self.services:
            raise ConfigurationError("at least one PoI is required")
        cap = max(s.max_value for s in self.services)
        if self.r_max is None:
            object.__setattr__(self, "r_max", cap)
        elif cap > self.r_max:
            raise ConfigurationError(f"service support exceeds r_max={self.r_max}")
        if self.arrival.mean <= 0:
            raise ConfigurationError("arrival rate must be positive")
        if any(s.mean <= 0 for s in self.services):
            raise ConfigurationError("every service rate must be positive")

    @property
    def n(self) -> int:
        return len(self.services)

    @property
    def lam(self) -> float:
        return self.arrival.mean

    @property
    def q(self) -> float:
        return self.arrival.prob_positive

    @property
    def arrival_second_moment(self) -> float:
        return self.arrival.second_moment

    @property
    def arrival_variance(self) -> float:
        return self.arrival.variance

    @property
    def mu(self) -> np.ndarray:
        return np.array([s.mean for s in self.services])

    @property
    def service_second_moments(self) -> np.ndarray:
        return np.array([s.second_moment for s in self.services])

    @property
    def service_variances(self) -> np.ndarray:
        return np.array([s.variance for s in self.services])

    @property
    def mu_sum(self) -> float:
        return float(self.mu.sum())

    @property
    def mu_max(self) -> float:
        return float(self.mu.max())

    @property
    def mu_min(self) -> float:
        return float(self.mu.min())

    @property
    def weights(self) -> np.ndarray:
        """Service-rate weights mu_n / mu_sum."""
        mu = self.mu
        return mu / mu.sum()

    def mu_summary(self) -> str:
        groups: list[list] = []
        for m in self.mu:
            if groups and groups[-1][0] == m:
                groups[-1][1] += 1
            else:
                groups.append([m, 1])
        return "|".join(f"{m:g}x{c}" for m, c in groups)


# ---------------------------------------------------------------------------
# Prices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriceProcess:
    """Time-varying PoI prices.

    ``kind="discrete"`` switches every ``change_period`` slots to a different
    value of ``value_set``, chosen uniformly. ``kind="uniform"`` redraws from
    U[p_min, p_max] at the same cadence.
    """

    value_set: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    change_period: int = 100
    kind: str = "discrete"
    p_min: float | None = None
    p_max: float | None = None
    initial: tuple[float, ...] | None = None  # None means uniform-random

    def __post_init__(self) -> None:
        if self.kind not in ("discrete", "uniform"):
            raise ConfigurationError(f"unknown price kind {self.kind!r}")
        if self.change_period < 1:
            raise ConfigurationError("change_period must be a positive integer")
        vs = tuple(sorted(float(v) for v in self.value_set))
        object.__setattr__(self, "value_set", vs)
        if self.kind == "discrete":
            if not vs:
                raise ConfigurationError("empty price value set")
            lo = vs[0] if self.p_min is None else self.p_min
            hi = vs[-1] if self.p_max is None else self.p_max
        else:
            lo = 0.0 if self.p_min is None else self.p_min
            hi = 1.0 if self.p_max is None else self.p_max
        object.__setattr__(self, "p_min", float(lo))
        object.__setattr__(self, "p_max", float(hi))
        if lo < 0 or hi < lo:
            raise ConfigurationError(f"invalid price range [{lo}, {hi}]")
        if self.kind == "discrete" and (vs[0] < lo or vs[-1] > hi):
            raise ConfigurationError("price values fall outside [p_min, p_max]")
        if self.initial is not None:
            init = tuple(float(v) for v in self.initial)
            object.__setattr__(self, "initial", init)
            if any(v < lo or v > hi for v in init):
                raise ConfigurationError("initial prices fall outside [p_min, p_max]")

    def initial_prices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.initial is not None:
            if len(self.initial) == 1:
                return np.full(n, self.initial[0])
            if len(self.initial) != n:
                raise ConfigurationError(f"expected {n} initial prices, got {len(self.initial)}")
            return np.array(self.initial, dtype=float)
        if self.kind == "discrete":
            return np.asarray(self.value_set)[rng.integers(0, len(self.value_set), size=n)]
        return rng.uniform(self.p_min, self.p_max, size=n)

    def is_change_slot(self, slot: int) -> bool:
        return slot > 0 and slot % self.change_period == 0

    def advance(self, prices: np.ndarray, slot: int, rng: np.random.Generator) -> np.ndarray:
        """Prices in effect at ``slot`` given those of ``slot - 1``."""
        if not self.is_change_slot(slot):
            return prices
        if self.kind == "uniform":
            return rng.uniform(self.p_min, self.p_max, size=len(prices))
        m = len(self.value_set)
        if m < 2:
            raise ConfigurationError("a price change needs at least two values to move between")
        idx = np.searchsorted(self.value_set, prices)
        if np.any(idx >= m) or np.any(np.asarray(self.value_set)[np.minimum(idx, m - 1)] != prices):
            raise ConfigurationError("current price is not a member of value_set")
        # offset in 1..m-1 lands uniformly on the other m-1 values
        idx = (idx + rng.integers(1, m, size=len(prices))) % m
        return np.asarray(self.value_set)[idx]


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoiState:
    price: float
    record: float
    queue: int
    age: int
    last_update: int


@dataclass
class SystemState:
    """Per-PoI arrays plus the slot counter.

    ``last_update`` is the first slot in which the refreshed record is in
    effect, so ``age == slot - last_update`` holds at every observation point
    and a record set at ``last_update > 0`` carries the price of slot
    ``last_update - 1``.
    """

    price: np.ndarray
    record: np.ndarray
    queue: np.ndarray
    age: np.ndarray
    last_update: np.ndarray
    slot: int = 0

    @classmethod
    def initial(cls, prices: Sequence[float]) -> "SystemState":
        p = np.array(prices, dtype=float)
        n = len(p)
        return cls(
            price=p,
            record=p.copy(),
            queue=np.zeros(n, dtype=np.int64),
            age=np.zeros(n, dtype=np.int64),
            last_update=np.zeros(n, dtype=np.int64),
        )

    @property
    def n(self) -> int:
        return len(self.price)

    @property
    def pois(self) -> tuple[PoiState, ...]:
        return tuple(
            PoiState(float(p), float(r), int(q), int(a), int(u))
            for p, r, q, a, u in zip(self.price, self.record, self.queue, self.age, self.last_update)
        )

    def copy(self) -> "SystemState":
        return SystemState(
            self.price.copy(),
            self.record.copy(),
            self.queue.copy(),
            self.age.copy(),
            self.last_update.copy(),
            self.slot,
        )


@dataclass(frozen=True)
class SlotOutcome:
    arrivals: int
    selected: int
    selection_vector: np.ndarray
    services: np.ndarray
    record_updated: np.ndarray


def advance_price(pp: PriceProcess, state: SystemState, rng: np.random.Generator) -> SystemState:
    """Apply the price process at the start of ``state.slot``."""
    new = state.copy()
    new.price = np.asarray(pp.advance(state.price, state.slot, rng), dtype=float)
    return new


def step(state: SystemState, policy, arrivals: int, services: np.ndarray, u: float = 0.0):
    """Execute one slot and return ``(next_state, outcome)``.

    Order inside the slot: the policy observes pre-update (age, queue, record)
    and picks one PoI for all ``arrivals`` users; if anyone arrived the record
    of that PoI is refreshed with its current price; queues follow
    ``max(Q + A*S - R, 0)``; ages reset for the refreshed PoI and grow by one
    elsewhere.
    """
    n = state.n
    active = arrivals > 0
    chosen = policy.select(state.age, state.queue, state.record, active=active, u=u)
    sel = np.zeros(n, dtype=np.int64)
    sel[chosen] = 1
    updated = sel.astype(bool) & active
    t = state.slot

    new = state.copy()
    if active:
        new.record[chosen] = state.price[chosen]
        new.last_update[chosen] = t + 1
    new.queue = np.maximum(state.queue + arrivals * sel - np.asarray(services, dtype=np.int64), 0)
    new.age = np.where(updated, 0, state.age + 1)
    new.slot = t + 1
    return new, SlotOutcome(int(arrivals), int(chosen), sel, np.asarray(services), updated)


# ---------------------------------------------------------------------------
# Exogenous input stream
# ---------------------------------------------------------------------------

CHUNK = 1 << 16


@dataclass
class InputBlock:
    """Inputs for slots ``start .. start + len(arrivals) - 1``."""

    start: int
    arrivals: np.ndarray  # (k,)
    services: np.ndarray  # (k, N)
    prices: np.ndarray  # (k, N) price in effect during each slot
    tie: np.ndarray  # (k,) uniforms for tie breaking / randomized selection

    def __len__(self) -> int:
        return len(self.arrivals)


class InputStream:
    """Seeded source of per-slot inputs.

    Arrivals, services, prices and tie-breaking uniforms come from independent
    child streams of one ``SeedSequence`` so that two runs sharing a seed see
    the same (A[t], R_n[t]) realisations regardless of policy.
    """

    def __init__(self, spec: ProcessSpec, prices: PriceProcess | None, seed) -> None:
        self.spec = spec
        self.price_process = prices
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        g_arr, g_srv, g_price, g_tie = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(4))
        self._g_arr, self._g_srv, self._g_price, self._g_tie = g_arr, g_srv, g_price, g_tie
        self.slot = 0
        if prices is None:
            self._price = np.ones(spec.n)
        else:
            self._price = prices.initial_prices(spec.n, g_price)

    @property
    def initial_prices(self) -> np.ndarray:
        return self._price.copy()

    def draw(self, k: int) -> InputBlock:
        spec = self.spec
        t0 = self.slot
        arrivals = spec.arrival.sample(self._g_arr.random(k))
        u = self._g_srv.random((k, spec.n))
        if all(type(d) is Bernoulli for d in spec.services):
            services = (u < np.array([d.p for d in spec.services])).astype(np.int64)
        else:
            services = np.empty((k, spec.n), dtype=np.int64)
            for j, dist in enumerate(spec.services):
                services[:, j] = dist.sample(u[:, j])
        prices = self._price_path(t0, k)
        tie = self._g_tie.random(k)
        self.slot = t0 + k
        return InputBlock(t0, arrivals, services, prices, tie)

    def _price_path(self, t0: int, k: int) -> np.ndarray:
        pp = self.price_process
        n = self.spec.n
        if pp is None:
            return np.broadcast_to(self._price, (k, n)).copy()
        period = pp.change_period
        # change slots inside [t0, t0 + k)
        first = max(1, -(-t0 // period)) * period
        changes = np.arange(first, t0 + k, period)
        # row 0 holds the carried-over price, row i+1 the price after changes[i]
        if pp.kind == "uniform":
            levels = np.empty((len(changes) + 1, n))
            levels[0] = self._price
            levels[1:] = self._g_price.uniform(pp.p_min, pp.p_max, size=(len(changes), n))
        else:
            m = len(pp.value_set)
            values = np.asarray(pp.value_set)
            idx0 = np.searchsorted(values, self._price)
            if len(changes) and m < 2:
                raise ConfigurationError("a price change needs at least two values to move between")
            steps = self._g_price.integers(1, max(m, 2), size=(len(changes), n))
            idx = np.vstack([idx0, (idx0 + np.cumsum(steps, axis=0)) % m])
            levels = values[idx]
        bounds = np.concatenate(([t0], changes, [t0 + k]))
        out = np.repeat(levels, np.diff(bounds), axis=0)
        self._price = out[-1].copy()
        return out

    def blocks(self, horizon: int, chunk: int = CHUNK) -> Iterator[InputBlock]:
        while self.slot < horizon:
            yield self.draw(min(chunk, horizon - self.slot))


def sample_slot_inputs(spec: ProcessSpec, rng: np.random.Generator) -> tuple[int, np.ndarray]:
    """Draw one slot's (A, R) directly from a generator."""
    a = int(spec.arrival.sample(rng.random(1))[0])
    u = rng.random(spec.n)
    r = np.array([int(d.sample(u[j : j + 1])[0]) for j, d in enumerate(spec.services)], dtype=np.int64)
    return a, r
