"""Closed-form PoA bounds, optimal-cost lower bounds and the pooled queue."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .core import InputStream, ProcessSpec
from .metrics import InfeasibleError, compute_epsilon


def thm1_bound(beta: float, n: int, p_max: float) -> float:
    """Deterministic-case PoA bound ``p_max / ((N-1) beta + p_max)``."""
    if n < 2:
        raise ValueError("the deterministic bound needs N >= 2")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return p_max / ((n - 1) * beta + p_max)


def B_of_gamma(gamma: float, spec: ProcessSpec) -> float:
    return float(gamma / (2.0 * spec.lam) * (spec.arrival_second_moment + spec.service_second_moments.sum()))


def B_of_gamma_conservative(gamma: float, spec: ProcessSpec) -> float:
    """Variant with every service second moment replaced by r_max**2."""
    return float(gamma / (2.0 * spec.lam) * (spec.arrival_second_moment + spec.n * spec.r_max**2))


def M_constant(epsilon: float, spec: ProcessSpec) -> float:
    gap = spec.mu_sum - spec.lam
    if gap <= 0:
        raise InfeasibleError("M needs lambda < mu_sum")
    spread = spec.arrival_variance + float(spec.service_variances.sum()) + gap**2
    return epsilon / (2.0 * spec.n * gap) * spread - 0.5 * epsilon * spec.r_max


def thm2_bound(beta: float, gamma: float, epsilon: float, spec: ProcessSpec, p_max: float) -> float:
    q = spec.q
    if q <= 0:
        raise ValueError("q must be positive")
    n = spec.n
    b = B_of_gamma(gamma, spec)
    m = M_constant(epsilon, spec)
    age_gap = n / q - spec.mu_sum / (2.0 * q * spec.mu_max) - 0.5
    denom = b + beta * (n / q - 1.0) + p_max
    return float((b - gamma * m + p_max + beta * age_gap) / denom)


def thm2_asymptotic_bound(spec: ProcessSpec) -> float:
    """Limit of the stochastic bound as beta grows without bound."""
    q = spec.q
    return 1.0 - 0.5 * (spec.mu_sum / (q * spec.mu_max) - 1.0) / (spec.n / q - 1.0)


def j_upper(beta: float, gamma: float, spec: ProcessSpec, p_max: float) -> float:
    """Upper bound on the selfish cost J(beta, gamma)."""
    return B_of_gamma(gamma, spec) + beta * (spec.n / spec.q - 1.0) + p_max


def weighted_age_lower_bound(spec: ProcessSpec) -> float:
    """Lower bound on sum_n (mu_n/mu_sum) * mean age under any policy."""
    return 0.5 * (spec.mu_sum / (spec.q * spec.mu_max) - 1.0)


def queue_lower_bound_analytic(epsilon: float, spec: ProcessSpec) -> float:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return M_constant(epsilon, spec) * spec.n / epsilon


@njit(cache=True)
def _pooled(A, RS, phi0, out):
    phi = phi0
    for i in range(A.shape[0]):
        out[i] = phi
        phi = phi + A[i] - RS[i]
        if phi < 0:
            phi = 0
    return phi


@dataclass
class PooledQueueResult:
    phi: np.ndarray  # Phi[t] for t = 0..T
    mean: float


def pooled_queue_run(spec: ProcessSpec, horizon: int, rng, *, warmup: int = 0) -> PooledQueueResult:
    """Single server fed by all arrivals and served by the summed capacity.

    ``rng`` is a seed (or SeedSequence) for :class:`InputStream`; passing the
    seed of a system run couples the two on identical (A[t], R_n[t]).
    """
    stream = rng if isinstance(rng, InputStream) else InputStream(spec, None, rng)
    phi = np.zeros(horizon + 1, dtype=np.int64)
    cur = 0
    for block in stream.blocks(horizon):
        cur = _pooled(block.arrivals, block.services.sum(axis=1), cur, phi[block.start : block.start + len(block)])
    phi[horizon] = cur
    return PooledQueueResult(phi, float(phi[warmup + 1 : horizon + 1].mean()))


@dataclass(frozen=True)
class BoundsReport:
    epsilon: float
    B_gamma: float
    B_gamma_conservative: float
    M: float
    thm1_poa_ub: float
    thm2_poa_ub: float
    thm2_asymptotic_ub: float
    det_age_lb: float
    weighted_age_lb: float
    queue_lb_analytic: float
    J_upper_thm2: float

    def as_dict(self) -> dict:
        return asdict(self)


def bounds_report(spec: ProcessSpec, beta: float, gamma: float, p_max: float) -> BoundsReport:
    n = spec.n
    eps = compute_epsilon(spec)
    return BoundsReport(
        epsilon=eps,
        B_gamma=B_of_gamma(gamma, spec),
        B_gamma_conservative=B_of_gamma_conservative(gamma, spec),
        M=M_constant(eps, spec),
        thm1_poa_ub=thm1_bound(beta, n, p_max) if n >= 2 else float("nan"),
        thm2_poa_ub=thm2_bound(beta, gamma, eps, spec, p_max),
        thm2_asymptotic_ub=thm2_asymptotic_bound(spec),
        det_age_lb=float(n - 1),
        weighted_age_lb=weighted_age_lower_bound(spec),
        queue_lb_analytic=queue_lower_bound_analytic(eps, spec),
        J_upper_thm2=j_upper(beta, gamma, spec, p_max),
    )
