"""Evaluation harness: experiment configs, the runner, and reporting."""

from .config import DatasetEntry, ExperimentConfig, load_config
from .pipelines import BUILTIN_PIPELINES, Pipeline, default_grid, fit_learner
from .report import emit_report
from .runner import (
    RunResult,
    SweepResult,
    compute_efficiencies,
    derive_seed,
    run_experiment,
    run_sweep,
    tune_hyperparams,
)

__all__ = [
    "DatasetEntry",
    "ExperimentConfig",
    "load_config",
    "Pipeline",
    "BUILTIN_PIPELINES",
    "default_grid",
    "fit_learner",
    "RunResult",
    "SweepResult",
    "tune_hyperparams",
    "run_sweep",
    "compute_efficiencies",
    "run_experiment",
    "derive_seed",
    "emit_report",
]
