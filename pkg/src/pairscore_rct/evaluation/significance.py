"""Regression screening of LLM-derived covariates."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd
from loguru import logger

from ..data import AugmentedCovariates, Experiment, OutcomeKind, append_columns
from ..data.encoding import ExtraColumn
from ..errors import DataValidationError
from ..imputation import RegressionFit, logistic_fit, ols_fit

TREATMENT_COLUMN = "treatment"
OOB_COLUMN = "oob_prediction"


@dataclass(frozen=True, slots=True)
class SignificanceReport:
    """Wald test of one LLM column in the full outcome model."""

    covariate: str
    coefficient: float
    se: float
    statistic: float
    p_value: float
    model_kind: str
    included_columns: tuple[str, ...]
    alpha: float = 0.05

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha

    def to_row(self) -> dict[str, Any]:
        return {
            "covariate": self.covariate,
            "coefficient": self.coefficient,
            "se": self.se,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "model_kind": self.model_kind,
            "significant": self.significant,
        }


def _design(
    experiment: Experiment,
    base: AugmentedCovariates,
    llm_cols: Mapping[str, ExtraColumn],
    oob_predictions: ExtraColumn | None,
) -> AugmentedCovariates:
    if base.n_rows != experiment.n:
        raise DataValidationError(
            f"base design has {base.n_rows} rows but the experiment has {experiment.n} units"
        )
    extras: dict[str, ExtraColumn] = {}
    provenance: dict[str, str] = {}
    if oob_predictions is not None:
        extras[OOB_COLUMN] = oob_predictions
        provenance[OOB_COLUMN] = "out-of-bag base model prediction"
    extras[TREATMENT_COLUMN] = experiment.z.astype(float)
    provenance[TREATMENT_COLUMN] = "treatment indicator"
    for name, column in llm_cols.items():
        if name in extras or name in base.column_names:
            raise DataValidationError(f"LLM column '{name}' clashes with an existing column")
        extras[name] = column
        provenance[name] = "llm"
    return append_columns(base, extras, provenance=provenance)


def _fit(experiment: Experiment, x: AugmentedCovariates) -> RegressionFit:
    if experiment.outcome_kind is OutcomeKind.BINARY:
        return logistic_fit(experiment.y, x)
    return ols_fit(experiment.y, x)


def significance_test(
    experiment: Experiment,
    base: AugmentedCovariates,
    llm_cols: Mapping[str, ExtraColumn],
    *,
    oob_predictions: ExtraColumn | None = None,
    alpha: float = 0.05,
) -> list[SignificanceReport]:
    """Wald test for every LLM column in base + OOB prediction + treatment + LLM columns.

    Logistic for binary outcomes, linear otherwise; p-values use the normal approximation.
    The screen is advisory: non-significant columns are reported and logged, never dropped.
    """

    if not llm_cols:
        raise DataValidationError("no LLM columns to test")
    x = _design(experiment, base, llm_cols, oob_predictions)
    fit = _fit(experiment, x)
    reports = []
    for name in llm_cols:
        index = fit.index(name)
        report = SignificanceReport(
            covariate=name,
            coefficient=float(fit.coefficients[index]),
            se=float(fit.standard_errors[index]),
            statistic=float(fit.statistics[index]),
            p_value=float(fit.p_values[index]),
            model_kind=fit.kind,
            included_columns=fit.names,
            alpha=alpha,
        )
        if not report.significant:
            logger.warning(
                f"LLM covariate '{name}' is not significant (p={report.p_value:.3f}); "
                "adjusted estimates are still reported"
            )
        reports.append(report)
    return reports


def regression_table(
    experiment: Experiment,
    base: AugmentedCovariates,
    llm_cols: Mapping[str, ExtraColumn],
    *,
    oob_predictions: ExtraColumn | None = None,
) -> pd.DataFrame:
    """Side-by-side estimates, SEs and p-values of the baseline model and the LLM model."""

    baseline = _fit(experiment, _design(experiment, base, {}, oob_predictions))
    with_llm = _fit(experiment, _design(experiment, base, llm_cols, oob_predictions))
    columns = {"estimate": "estimate", "se": "se", "p_value": "p"}
    frames = {
        "baseline": baseline.table()[list(columns)].rename(columns=columns),
        "with_llm": with_llm.table()[list(columns)].rename(columns=columns),
    }
    table = pd.concat(frames, axis=1)
    return table.reindex(list(with_llm.names))


def significance_frame(reports: list[SignificanceReport]) -> pd.DataFrame:
    return pd.DataFrame([report.to_row() for report in reports])


def write_significance_csv(reports: list[SignificanceReport], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    significance_frame(reports).to_csv(path, index=False)
    return path
