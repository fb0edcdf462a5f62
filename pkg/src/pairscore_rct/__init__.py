"""Pairwise LLM comparisons as design-based covariates for randomized experiments."""

from .config import PipelineSettings
from .data import Experiment, load_experiment
from .estimation import EstimateResult, adjusted_estimate, ess_ratio, ht_estimate
from .pipeline import run_pipeline, run_stage

__all__ = [
    "EstimateResult",
    "Experiment",
    "PipelineSettings",
    "adjusted_estimate",
    "ess_ratio",
    "ht_estimate",
    "load_experiment",
    "run_pipeline",
    "run_stage",
]
