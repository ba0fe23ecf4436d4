"""Sweeps, CSV persistence, scaling fits, reports and the CLI."""

from .config import Cell, ExperimentSpec, load_config, spec_from_dict
from .report import emit_report
from .scaling import ScalingFit, fit_loglog, fit_scaling
from .sweep import COLUMNS, SCHEMA_VERSION, SweepResult, read_csv, run_sweep, seed_means, write_csv

__all__ = [name for name in dir() if not name.startswith("_")]
