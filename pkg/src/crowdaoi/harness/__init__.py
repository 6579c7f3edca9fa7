from .config import ExperimentConfig, load_config, parse_text, apply_items
from .experiment import (
    CSV_COLUMNS,
    ResultRow,
    emit_results,
    render_results,
    replication_seed,
    run_cell,
    run_experiment,
    run_trajectory,
)
from .presets import PRESETS, get_preset

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "PRESETS",
    "ResultRow",
    "apply_items",
    "emit_results",
    "get_preset",
    "load_config",
    "parse_text",
    "render_results",
    "replication_seed",
    "run_cell",
    "run_experiment",
    "run_trajectory",
]
