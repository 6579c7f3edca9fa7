"""Seeded replications over the (policy, beta, gamma) grid and result output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..bounds import BoundsReport, bounds_report
from ..core import ConfigurationError
from ..metrics import (
    InfeasibleError,
    ReplicationSummary,
    compute_epsilon,
    j_lower,
    poa_deterministic,
    poa_stochastic,
)
from ..policies import make_policy
from ..simulation import RunResult, simulate
from .config import ExperimentConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "preset", "policy", "beta", "gamma", "N", "lambda", "mu_summary",
    "mean_max_age", "weighted_mean_age", "mean_queue_sum", "cost_J", "poa_measured",
    "thm1_bound", "thm2_bound", "age_lb", "queue_lb_analytic", "epsilon", "B_gamma", "M",
    "stderr_poa", "replications", "seed",
)


@dataclass
class ResultRow:
    preset: str
    policy: str
    beta: float
    gamma: float
    N: int
    lam: float
    mu_summary: str
    mean_max_age: float
    weighted_mean_age: float
    mean_queue_sum: float
    cost_J: float
    poa_measured: float
    thm1_bound: float
    thm2_bound: float
    age_lb: float
    queue_lb_analytic: float
    epsilon: float
    B_gamma: float
    M: float
    stderr_poa: float
    replications: int
    seed: int
    # beyond the CSV columns
    poa_raw: float = math.nan
    poa_clamped: bool = False
    stderr_mean_max_age: float = math.nan
    stderr_weighted_mean_age: float = math.nan
    stderr_mean_queue_sum: float = math.nan
    stderr_cost_J: float = math.nan
    jsq_queue_sum: float = math.nan
    J_lower: float = math.nan
    mean_queue: list = field(default_factory=list)
    mean_age: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {("lambda" if k == "lam" else k): v for k, v in asdict(self).items()}

    def csv_record(self) -> list:
        rec = self.as_dict()
        return [rec[c] for c in CSV_COLUMNS]


def cell_key(policy: str, beta: float, gamma: float) -> str:
    return f"{policy}|beta={beta!r}|gamma={gamma!r}"


def replication_seed(base_seed: int, key: str, replication: int) -> np.random.SeedSequence:
    """Seed from (base seed, cell identity, replication index).

    The cell enters through a digest of its key rather than its position, so
    adding sweep points leaves existing cells untouched.
    """
    digest = int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")
    return np.random.SeedSequence([base_seed, digest & 0xFFFFFFFF, digest >> 32, replication])


def _bounds(config: ExperimentConfig, beta: float, gamma: float) -> BoundsReport | None:
    try:
        return bounds_report(config.process, beta, gamma, config.prices.p_max)
    except InfeasibleError:
        return None


def run_cell(config: ExperimentConfig, policy: str, beta: float, gamma: float) -> ResultRow:
    spec = config.process
    n = spec.n
    warmup = config.effective_warmup
    stochastic = config.poa == "stochastic"
    eps = compute_epsilon(spec) if stochastic else _safe_epsilon(spec)
    report = _bounds(config, beta, gamma)
    key = cell_key(policy, beta, gamma)
    cost_params = (beta, gamma, eps) if not math.isnan(eps) else None

    runs: list[RunResult] = []
    jsq_sums: list[float] = []
    poa_raw: list[float] = []
    costs: list[float] = []
    lowers: list[float] = []
    for r in range(config.replications):
        seed = replication_seed(config.base_seed, key, r)
        pol = make_policy(policy, n=n, beta=beta, gamma=gamma, mu=spec.mu, tie_break=_tie(config, policy))
        res = simulate(spec, config.prices, pol, config.horizon, warmup=warmup, seed=seed, cost_params=cost_params)
        runs.append(res)
        j = res.metrics.cost(beta, gamma, eps) if cost_params else math.nan
        costs.append(j)
        if config.poa == "deterministic":
            poa_raw.append(poa_deterministic(res.metrics.mean_max_age, n).raw)
        elif stochastic:
            jsq = simulate(spec, config.prices, make_policy("jsq", n=n, tie_break=config.tie_break), config.horizon, warmup=warmup, seed=seed)
            jsq_sums.append(jsq.metrics.mean_queue_sum)
            lower = j_lower(beta, gamma, eps, n, jsq.metrics.mean_queue_sum, report.weighted_age_lb)
            lowers.append(lower)
            poa_raw.append(poa_stochastic(j, lower).raw if lower > 0 else math.nan)

    max_age = ReplicationSummary.of([x.metrics.mean_max_age for x in runs])
    w_age = ReplicationSummary.of([x.metrics.weighted_mean_age for x in runs])
    q_sum = ReplicationSummary.of([x.metrics.mean_queue_sum for x in runs])
    cost = ReplicationSummary.of(costs)
    if poa_raw:
        poa = ReplicationSummary.of(poa_raw)
        clamped_value = min(max(poa.mean, 0.0), 1.0)
        clamped = clamped_value != poa.mean
        if clamped:
            log.warning("cell %s: PoA %.6g clamped to %.6g", key, poa.mean, clamped_value)
    else:
        poa = ReplicationSummary(math.nan, math.nan, 0)
        clamped_value, clamped = math.nan, False

    nan = math.nan
    b = report
    return ResultRow(
        preset=config.preset or "",
        policy=policy,
        beta=beta,
        gamma=gamma,
        N=n,
        lam=spec.lam,
        mu_summary=spec.mu_summary(),
        mean_max_age=max_age.mean,
        weighted_mean_age=w_age.mean,
        mean_queue_sum=q_sum.mean,
        cost_J=cost.mean,
        poa_measured=clamped_value,
        thm1_bound=b.thm1_poa_ub if b else nan,
        thm2_bound=b.thm2_poa_ub if b else nan,
        age_lb=(float(n - 1) if config.poa == "deterministic" else (b.weighted_age_lb if b else nan)),
        queue_lb_analytic=b.queue_lb_analytic if b else nan,
        epsilon=eps,
        B_gamma=b.B_gamma if b else nan,
        M=b.M if b else nan,
        stderr_poa=poa.stderr,
        replications=config.replications,
        seed=config.base_seed,
        poa_raw=poa.mean,
        poa_clamped=clamped,
        stderr_mean_max_age=max_age.stderr,
        stderr_weighted_mean_age=w_age.stderr,
        stderr_mean_queue_sum=q_sum.stderr,
        stderr_cost_J=cost.stderr,
        jsq_queue_sum=float(np.mean(jsq_sums)) if jsq_sums else nan,
        J_lower=float(np.mean(lowers)) if lowers else nan,
        mean_queue=np.mean([x.metrics.mean_queue for x in runs], axis=0).tolist(),
        mean_age=np.mean([x.metrics.mean_age for x in runs], axis=0).tolist(),
        bounds=b.as_dict() if b else {},
    )


def _tie(config: ExperimentConfig, policy: str) -> str | None:
    return None if policy == "round_robin" else config.tie_break


def _safe_epsilon(spec) -> float:
    try:
        return compute_epsilon(spec)
    except InfeasibleError:
        return math.nan


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """One aggregated row per (policy, beta, gamma) cell, in config order."""
    if config.poa == "stochastic":
        compute_epsilon(config.process)  # infeasible systems fail before any simulation
    if config.poa == "deterministic" and config.n < 2:
        raise ConfigurationError("deterministic PoA needs at least two PoIs")
    for policy in config.policy:
        make_policy(policy, n=config.n, mu=config.process.mu)  # validate names up front
    rows = []
    for policy in config.policy:
        for beta in config.beta:
            for gamma in config.gamma:
                log.info("cell policy=%s beta=%g gamma=%g", policy, beta, gamma)
                rows.append(run_cell(config, policy, beta, gamma))
    return rows


def run_trajectory(config: ExperimentConfig, *, policy: str | None = None, beta: float | None = None, gamma: float | None = None, replication: int = 0) -> RunResult:
    """Single recorded run of one cell (defaults: the first cell)."""
    policy = policy or config.policy[0]
    beta = config.beta[0] if beta is None else beta
    gamma = config.gamma[0] if gamma is None else gamma
    spec = config.process
    seed = replication_seed(config.base_seed, cell_key(policy, beta, gamma), replication)
    pol = make_policy(policy, n=spec.n, beta=beta, gamma=gamma, mu=spec.mu, tie_break=_tie(config, policy))
    return simulate(spec, config.prices, pol, config.horizon, warmup=config.effective_warmup, seed=seed, record_trajectory=True)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def render_results(rows: Sequence[ResultRow], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no result rows to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row.csv_record()])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([_jsonable(r.as_dict()) for r in rows], indent=2) + "\n"
    raise ConfigurationError(f"unknown format {fmt!r}")


def emit_results(rows: Sequence[ResultRow], fmt: str, path) -> None:
    text = render_results(rows, fmt)
    Path(path).write_text(text, encoding="utf-8")
