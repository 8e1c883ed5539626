"""Benchmark experiments, configuration, and the command-line interface."""

from .complexity import FlopEstimate, complexity_estimate
from .config import EXPERIMENTS, ExperimentConfig, default_config, load, resolve, to_text
from .experiments import (
    run_conjecture,
    run_experiment,
    run_fig2,
    run_fig3,
    run_fig4,
    run_fig5,
    run_tables,
)
from .io import ResultRow, shape_label, write_outputs

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "FlopEstimate",
    "ResultRow",
    "complexity_estimate",
    "default_config",
    "load",
    "resolve",
    "run_conjecture",
    "run_experiment",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_fig5",
    "run_tables",
    "shape_label",
    "to_text",
    "write_outputs",
]
