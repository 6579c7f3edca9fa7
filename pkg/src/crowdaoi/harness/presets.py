"""Built-in experiment presets."""

from __future__ import annotations

from ..core import Bernoulli, ConfigurationError, Deterministic, PriceProcess, ProcessSpec
from .config import ExperimentConfig

N_POI = 10
PRICE_SET = (0.25, 0.5, 0.75, 1.0)
PRICE_PERIOD = 100
ARRIVAL_RATE = 0.9
BETA_SWEEP = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0)
GAMMA_GRID = (0.1, 0.5, 1.0, 2.0)
DEFAULT_HORIZON = 2_000_000
DEFAULT_REPLICATIONS = 10


def deterministic_process(n: int = N_POI) -> ProcessSpec:
    return ProcessSpec(Deterministic(k=1), (Deterministic(k=1),) * n)


def symmetric_process() -> ProcessSpec:
    return ProcessSpec(Bernoulli(p=ARRIVAL_RATE), (Bernoulli(p=0.1),) * N_POI)


def asymmetric_process() -> ProcessSpec:
    return ProcessSpec(Bernoulli(p=ARRIVAL_RATE), (Bernoulli(p=0.11),) * 5 + (Bernoulli(p=0.09),) * 5)


def _fig2() -> ExperimentConfig:
    # uniform prices on [0, 1]; the cheap PoI's record keeps winning
    prices = PriceProcess(kind="uniform", p_min=0.0, p_max=1.0, change_period=PRICE_PERIOD, initial=(0.999, 0.1))
    return ExperimentConfig(
        process=deterministic_process(2),
        prices=prices,
        horizon=10_000,
        warmup=0,
        replications=1,
        policy=("greedy",),
        beta=(0.0,),
        gamma=(0.0,),
        poa="none",
        preset="fig2",
    )


def _fig3() -> ExperimentConfig:
    return ExperimentConfig(
        process=deterministic_process(),
        prices=PriceProcess(PRICE_SET, PRICE_PERIOD),
        horizon=DEFAULT_HORIZON,
        replications=DEFAULT_REPLICATIONS,
        policy=("selfish",),
        beta=BETA_SWEEP,
        gamma=(0.0,),
        poa="deterministic",
        preset="fig3",
    )


def _stochastic(process: ProcessSpec, name: str) -> ExperimentConfig:
    return ExperimentConfig(
        process=process,
        prices=PriceProcess(PRICE_SET, PRICE_PERIOD),
        horizon=DEFAULT_HORIZON,
        replications=DEFAULT_REPLICATIONS,
        policy=("selfish",),
        beta=BETA_SWEEP,
        gamma=GAMMA_GRID,
        poa="stochastic",
        preset=name,
    )


PRESETS = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": lambda: _stochastic(asymmetric_process(), "fig4"),
    "fig5": lambda: _stochastic(symmetric_process(), "fig5"),
}


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
