"""Independent exact-arithmetic oracles.

Everything here works from a plain description of the distributions as
(value, probability) pairs in ``Fraction`` form and never imports the
package's bound or metric code.
"""

from fractions import Fraction as F


def bern(p):
    p = F(p)
    return [(0, 1 - p), (1, p)]


def det(k):
    return [(k, F(1))]


def moments(dist):
    mean = sum(v * p for v, p in dist)
    second = sum(v * v * p for v, p in dist)
    var = sum((v - mean) ** 2 * p for v, p in dist)
    prob_pos = sum(p for v, p in dist if v > 0)
    return mean, second, var, prob_pos


def epsilon_bisection(arrival, services, iters=200):
    """Largest eps satisfying mu_n/lam >= mu_n/mu_sum + eps/N for all n, by bisection."""
    lam = moments(arrival)[0]
    mus = [moments(s)[0] for s in services]
    mu_sum = sum(mus)
    n = len(services)

    def feasible(eps):
        return all(m / lam >= m / mu_sum + eps / n for m in mus)

    lo, hi = F(0), F(n) * max(mus) / lam
    assert feasible(lo) and not feasible(hi)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def b_gamma(gamma, arrival, services):
    lam, a2, _, _ = moments(arrival)
    return F(gamma) / (2 * lam) * (a2 + sum(moments(s)[1] for s in services))


def m_const(eps, arrival, services):
    lam, _, var_a, _ = moments(arrival)
    mus = [moments(s)[0] for s in services]
    d = sum(mus) - lam
    r_max = max(v for s in services for v, p in s if p > 0)
    n = len(services)
    return F(eps) / (2 * n * d) * (var_a + sum(moments(s)[2] for s in services) + d * d) - F(eps) * r_max / 2


def weighted_age_lb(arrival, services):
    q = moments(arrival)[3]
    mus = [moments(s)[0] for s in services]
    return F(1, 2) * (sum(mus) / (q * max(mus)) - 1)


def thm2(beta, gamma, eps, arrival, services, p_max):
    q = moments(arrival)[3]
    mus = [moments(s)[0] for s in services]
    n = len(services)
    b = b_gamma(gamma, arrival, services)
    m = m_const(eps, arrival, services)
    beta, gamma, p_max = F(beta), F(gamma), F(p_max)
    den = b + beta * (F(n) / q - 1) + p_max
    num = b - gamma * m + p_max + beta * (F(n) / q - sum(mus) / (2 * q * max(mus)) - F(1, 2))
    return num / den


SYMMETRIC = (bern(F(9, 10)), [bern(F(1, 10))] * 10)
ASYMMETRIC = (bern(F(9, 10)), [bern(F(11, 100))] * 5 + [bern(F(9, 100))] * 5)
