"""Configuration ingestion, command pipelines, and run persistence."""

from .config import RunConfig, Scenario, load_config, resolve_scenario
from .fitting import CSV_COLUMNS, SweepRecord, WidthFit, fit_width
from .runner import RunResult, run_command

__all__ = [
    "CSV_COLUMNS",
    "RunConfig",
    "RunResult",
    "Scenario",
    "SweepRecord",
    "WidthFit",
    "fit_width",
    "load_config",
    "resolve_scenario",
    "run_command",
]
