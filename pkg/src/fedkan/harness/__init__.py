from .config import ConfigError, DatasetSource, ExperimentGrid, load_config, parse_config
from .grid import METRICS_COLUMNS, Cell, MetricsError, read_metrics, run_cell, run_grid
from .report import emit_curves, parse_selector, summarize

__all__ = [
    "Cell",
    "ConfigError",
    "DatasetSource",
    "ExperimentGrid",
    "METRICS_COLUMNS",
    "MetricsError",
    "emit_curves",
    "load_config",
    "parse_config",
    "parse_selector",
    "read_metrics",
    "run_cell",
    "run_grid",
    "summarize",
]
