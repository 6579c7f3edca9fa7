"""PoI-selection rules.

Every policy maps the observed (age, queue, record) vectors to one PoI index.
Score-based policies pick an argmax; ties are broken either by lowest index or
uniformly using the slot's tie-breaking uniform ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigurationError

TIE_BREAKS = ("random", "lowest")

# integer codes shared with the compiled engine
SELFISH, GREEDY, ROUND_ROBIN, JSQ, MAX_AGE, STATIONARY = range(6)


def argmax_tie(scores: np.ndarray, tie_break: str, u: float) -> int:
    best = scores.max()
    ties = np.flatnonzero(scores == best)
    if tie_break == "lowest" or len(ties) == 1:
        return int(ties[0])
    return int(ties[int(u * len(ties))])


@dataclass
class Policy:
    tie_break: str = "random"

    name = "policy"
    code = -1

    def __post_init__(self) -> None:
        if self.tie_break not in TIE_BREAKS:
            raise ConfigurationError(f"tie_break must be one of {TIE_BREAKS}")

    def scores(self, age, queue, record) -> np.ndarray:
        raise NotImplementedError

    def select(self, age, queue, record, *, active: bool = True, u: float = 0.0) -> int:
        return argmax_tie(self.scores(age, queue, record), self.tie_break, u)

    def reset(self) -> None:
        """Clear per-run state."""

    # parameters handed to the compiled engine
    def kernel_params(self) -> tuple[float, float, np.ndarray]:
        return 0.0, 0.0, np.zeros(1)


@dataclass
class SelfishLinear(Policy):
    """Users maximise ``beta*age - gamma*queue - record``."""

    beta: float = 1.0
    gamma: float = 1.0
    tie_break: str = "random"

    name = "selfish"
    code = SELFISH

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.beta < 0 or self.gamma < 0:
            raise ConfigurationError("beta and gamma must be non-negative")

    def scores(self, age, queue, record):
        return self.beta * np.asarray(age, dtype=float) - self.gamma * np.asarray(queue, dtype=float) - record

    def kernel_params(self):
        return float(self.beta), float(self.gamma), np.zeros(1)


@dataclass
class PriceGreedy(Policy):
    """Zero-reward limit: maximise ``-gamma*queue - record``."""

    gamma: float = 0.0
    tie_break: str = "random"

    name = "greedy"
    code = GREEDY

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.gamma < 0:
            raise ConfigurationError("gamma must be non-negative")

    def scores(self, age, queue, record):
        return -self.gamma * np.asarray(queue, dtype=float) - record

    def kernel_params(self):
        return 0.0, float(self.gamma), np.zeros(1)


@dataclass
class MaxAge(Policy):
    name = "max_age"
    code = MAX_AGE

    def scores(self, age, queue, record):
        return np.asarray(age, dtype=float)


@dataclass
class JoinShortestQueue(Policy):
    name = "jsq"
    code = JSQ

    def scores(self, age, queue, record):
        return -np.asarray(queue, dtype=float)


@dataclass
class RoundRobin(Policy):
    """Cyclic cursor that advances only on slots with arrivals."""

    n: int = 1
    cursor: int = 0
    tie_break: str = "lowest"

    name = "round_robin"
    code = ROUND_ROBIN

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.n < 1 or not 0 <= self.cursor < self.n:
            raise ConfigurationError("round robin cursor must lie in 0..n-1")
        self._start = self.cursor

    def select(self, age, queue, record, *, active=True, u=0.0):
        chosen = self.cursor
        if active:
            self.cursor = (self.cursor + 1) % self.n
        return chosen

    def reset(self):
        self.cursor = self._start


@dataclass
class StationaryRandomized(Policy):
    """Picks PoI n with probability ``weights[n]`` (mu_n / mu_sum)."""

    weights: np.ndarray = field(default_factory=lambda: np.ones(1))

    name = "stationary"
    code = STATIONARY

    def __post_init__(self) -> None:
        super().__post_init__()
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-12):
            raise ConfigurationError("weights must be a probability vector")
        self.weights = w
        self._cum = np.cumsum(w)

    @classmethod
    def from_rates(cls, mu) -> "StationaryRandomized":
        mu = np.asarray(mu, dtype=float)
        return cls(weights=mu / mu.sum())

    def select(self, age, queue, record, *, active=True, u=0.0):
        return int(min(np.searchsorted(self._cum, u, side="right"), len(self._cum) - 1))

    def kernel_params(self):
        return 0.0, 0.0, self._cum


POLICY_NAMES = ("selfish", "greedy", "round_robin", "jsq", "max_age", "stationary")


def make_policy(name: str, *, n: int, beta: float = 0.0, gamma: float = 0.0, mu=None, tie_break: str | None = None) -> Policy:
    """Build a fresh policy instance from its harness name."""
    kw = {} if tie_break is None else {"tie_break": tie_break}
    if name == "selfish":
        return SelfishLinear(beta=beta, gamma=gamma, **kw)
    if name == "greedy":
        return PriceGreedy(gamma=gamma, **kw)
    if name == "round_robin":
        return RoundRobin(n=n, **kw)
    if name == "jsq":
        return JoinShortestQueue(**kw)
    if name == "max_age":
        return MaxAge(**kw)
    if name == "stationary":
        if mu is None:
            raise ConfigurationError("stationary policy needs service rates")
        return StationaryRandomized(weights=np.asarray(mu) / np.sum(mu), **kw)
    raise ConfigurationError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
