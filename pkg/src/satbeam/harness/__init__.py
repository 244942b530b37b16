"""Monte Carlo harness: configuration files, sweeps and CSV reports."""

from .config import ConfigError, SweepConfig, parse_config, parse_config_text
from .sweep import (
    AGGREGATE_HEADER,
    CSV_HEADER,
    ResultRow,
    aggregate,
    calibrate_power,
    derive_seed,
    emit_report,
    run_scheme,
    run_sweep,
    run_trial,
)
