"""Synthetic experiments and Monte-Carlo checks of the estimators."""

from .dgp import DgpConfig, OutcomeModel, assign, build_experiment, draw_population, generate
from .monte_carlo import (
    MIN_REPLICATIONS,
    Estimator,
    McConfig,
    McReport,
    McRow,
    StratifySource,
    monte_carlo,
    pair_scores,
)
from .suite import default_suite, run_suite, suite_by_name, suite_frame, write_mc_csv

__all__ = [
    "MIN_REPLICATIONS",
    "DgpConfig",
    "Estimator",
    "McConfig",
    "McReport",
    "McRow",
    "OutcomeModel",
    "StratifySource",
    "assign",
    "build_experiment",
    "default_suite",
    "draw_population",
    "generate",
    "monte_carlo",
    "pair_scores",
    "run_suite",
    "suite_by_name",
    "suite_frame",
    "write_mc_csv",
]
