"""Significance screening and covariate-set comparison."""

from .comparison import (
    ComparisonReport,
    CovariateRecipe,
    compare_models,
    render_comparison_text,
    write_comparison_csv,
)
from .significance import (
    OOB_COLUMN,
    TREATMENT_COLUMN,
    SignificanceReport,
    regression_table,
    significance_frame,
    significance_test,
    write_significance_csv,
)

__all__ = [
    "OOB_COLUMN",
    "TREATMENT_COLUMN",
    "ComparisonReport",
    "CovariateRecipe",
    "SignificanceReport",
    "compare_models",
    "regression_table",
    "render_comparison_text",
    "significance_frame",
    "significance_test",
    "write_comparison_csv",
    "write_significance_csv",
]
