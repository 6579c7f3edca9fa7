"""Discrete-time simulation and bounds for information freshness with selfish users."""

from .bounds import (
    BoundsReport,
    B_of_gamma,
    B_of_gamma_conservative,
    M_constant,
    bounds_report,
    pooled_queue_run,
    queue_lower_bound_analytic,
    thm1_bound,
    thm2_asymptotic_bound,
    thm2_bound,
    weighted_age_lower_bound,
)
from .core import (
    Bernoulli,
    ConfigurationError,
    Deterministic,
    Discrete,
    InputStream,
    PriceProcess,
    ProcessSpec,
    SlotOutcome,
    SystemState,
    advance_price,
    sample_slot_inputs,
    step,
)
from .metrics import (
    InfeasibleError,
    ReplicationSummary,
    RunMetrics,
    compute_epsilon,
    cost_J,
    drift_diagnostics,
    poa_deterministic,
    poa_stochastic,
)
from .policies import (
    JoinShortestQueue,
    MaxAge,
    PriceGreedy,
    RoundRobin,
    SelfishLinear,
    StationaryRandomized,
    make_policy,
)
from .simulation import simulate

__version__ = "0.1.0"
