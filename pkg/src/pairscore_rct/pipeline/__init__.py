"""Resumable pipeline stages with a digest-checked run manifest."""

from .manifest import MANIFEST_NAME, RunManifest, Stage, StageRecord, file_digest
from .stages import (
    COMPARISON_CSV,
    COMPARISON_TXT,
    COMPARISONS_CSV,
    ESTIMATES_CSV,
    EXPERIMENT_CSV,
    IMPORTANCE_CSV,
    MONTE_CARLO_CSV,
    ORDER_EFFECTS_CSV,
    PAIRS_CSV,
    PIPELINE_ORDER,
    PREDICTIONS_CSV,
    REGRESSION_CSV,
    SCORES_CSV,
    SIGNIFICANCE_CSV,
    STRATA_CSV,
    StageContext,
    StageSpec,
    available_stages,
    open_manifest,
    run_pipeline,
    run_stage,
)

__all__ = [
    "COMPARISONS_CSV",
    "COMPARISON_CSV",
    "COMPARISON_TXT",
    "ESTIMATES_CSV",
    "EXPERIMENT_CSV",
    "IMPORTANCE_CSV",
    "MANIFEST_NAME",
    "MONTE_CARLO_CSV",
    "ORDER_EFFECTS_CSV",
    "PAIRS_CSV",
    "PIPELINE_ORDER",
    "PREDICTIONS_CSV",
    "REGRESSION_CSV",
    "SCORES_CSV",
    "SIGNIFICANCE_CSV",
    "STRATA_CSV",
    "RunManifest",
    "Stage",
    "StageContext",
    "StageRecord",
    "StageSpec",
    "available_stages",
    "file_digest",
    "open_manifest",
    "run_pipeline",
    "run_stage",
]
