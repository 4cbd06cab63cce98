"""Scenario generation, experiment sweeps, result files and the command line."""

from .experiments import (BASELINES, PRESETS, CrbValidation, ExperimentSpec, ResultRow,
                          aggregate, run_crb_sweep, run_experiment, run_region_sweep, run_single,
                          validate_crb)
from .io import emit_results, parse_results, plot_table, read_results
from .scenario import generate_scenario

__all__ = [
    "BASELINES", "PRESETS", "CrbValidation", "ExperimentSpec", "ResultRow", "aggregate",
    "emit_results", "generate_scenario", "parse_results", "plot_table", "read_results", "run_crb_sweep",
    "run_experiment", "run_region_sweep", "run_single", "validate_crb",
]
