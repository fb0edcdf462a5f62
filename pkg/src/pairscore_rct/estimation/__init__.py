"""Horvitz-Thompson and imputation-adjusted estimators."""

from .estimators import (
    NO_COVARIATES,
    Imputer,
    VarianceComponents,
    adjusted_estimate,
    ess_ratio,
    estimate_by_stratum,
    ht_estimate,
    sample_ate,
    unit_order_sum,
    variance_estimate,
)
from .report import ESTIMATE_COLUMNS, estimates_frame, write_estimates_csv
from .results import EstimateResult, Imputations, SyntheticTruth

__all__ = [
    "ESTIMATE_COLUMNS",
    "NO_COVARIATES",
    "EstimateResult",
    "Imputations",
    "Imputer",
    "SyntheticTruth",
    "VarianceComponents",
    "adjusted_estimate",
    "ess_ratio",
    "estimate_by_stratum",
    "estimates_frame",
    "ht_estimate",
    "sample_ate",
    "unit_order_sum",
    "variance_estimate",
    "write_estimates_csv",
]
