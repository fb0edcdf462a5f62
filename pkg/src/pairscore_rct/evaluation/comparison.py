"""Standard errors and effective sample sizes across covariate recipes."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..data import AugmentedCovariates, Experiment, encode_covariates
from ..data.encoding import ExtraColumn
from ..errors import DataValidationError
from ..estimation import EstimateResult, adjusted_estimate, ess_ratio
from ..imputation import FitReport, LearnerConfig, impute


class CovariateRecipe(BaseModel):
    """A labelled covariate set: the encoded base covariates (optionally) plus named extras."""

    label: str = Field(min_length=1)
    columns: list[str] = Field(default_factory=list)
    include_base: bool = True

    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def is_base(self) -> bool:
        return self.include_base and not self.columns


@dataclass(frozen=True)
class ComparisonReport:
    """Per-stratum adjusted estimates for every recipe, with ESS ratios against the base."""

    results: tuple[EstimateResult, ...]
    labels: tuple[str, ...]
    base_label: str
    ess: dict[tuple[str, str], float] = field(default_factory=dict)
    fit_reports: dict[tuple[str, str], FitReport] = field(default_factory=dict)

    def frame(self) -> pd.DataFrame:
        rows = [
            {
                "stratum": result.stratum or "",
                "covariate_set_label": result.covariate_set_label,
                "tau_hat": result.tau_hat,
                "se": result.se,
                "ess_vs_base": self.ess[(result.stratum or "", result.covariate_set_label)],
                "n": result.n,
            }
            for result in self.results
        ]
        return pd.DataFrame(
            rows, columns=["stratum", "covariate_set_label", "tau_hat", "se", "ess_vs_base", "n"]
        )

    def _pivot(self, value: str) -> pd.DataFrame:
        table = self.frame().pivot(index="stratum", columns="covariate_set_label", values=value)
        strata = list(dict.fromkeys(result.stratum or "" for result in self.results))
        return table.reindex(index=strata, columns=list(self.labels))

    def se_table(self) -> pd.DataFrame:
        return self._pivot("se")

    def ess_table(self) -> pd.DataFrame:
        return self._pivot("ess_vs_base")

    def importance_frame(self) -> pd.DataFrame:
        """Forest variable importance per (stratum, recipe); empty for linear learners."""

        rows = [
            {"stratum": stratum, "covariate_set_label": label, "column": name, "importance": value}
            for (stratum, label), report in self.fit_reports.items()
            if report.importance
            for name, value in report.importance.items()
        ]
        return pd.DataFrame(
            rows, columns=["stratum", "covariate_set_label", "column", "importance"]
        )


def _check_recipes(recipes: Sequence[CovariateRecipe], extras: Mapping[str, ExtraColumn]) -> str:
    if not recipes:
        raise DataValidationError("at least one covariate recipe is required")
    labels = [recipe.label for recipe in recipes]
    if len(set(labels)) != len(labels):
        raise DataValidationError("recipe labels must be unique")
    base = [recipe for recipe in recipes if recipe.is_base]
    if not base:
        raise DataValidationError("the recipes must include a base recipe (base covariates only)")
    for recipe in recipes:
        absent = [name for name in recipe.columns if name not in extras]
        if absent:
            raise DataValidationError(
                f"recipe '{recipe.label}' references unknown column(s): {', '.join(absent)}"
            )
    return base[0].label


def _ess(se_base: float, se: float) -> float:
    try:
        return ess_ratio(se_base, se)
    except DataValidationError:
        return math.nan


def compare_models(
    experiment: Experiment,
    recipes: Sequence[CovariateRecipe],
    learner: LearnerConfig,
    *,
    extras: Mapping[str, ExtraColumn] | None = None,
    missing_as_level: bool = False,
) -> ComparisonReport:
    """Cross-fitted adjusted estimate for every recipe in every stratum.

    Strata are analysed separately; each recipe is encoded within the stratum, imputed with
    the configured learner (leave-one-out or out-of-bag) and passed to the adjusted estimator.
    Columns missing for every unit of a stratum are left out of that stratum's fits.
    """

    extras = dict(extras or {})
    for name, column in extras.items():
        if len(column) != experiment.n:
            raise DataValidationError(
                f"column '{name}' has {len(column)} rows, expected {experiment.n}"
            )
    base_label = _check_recipes(recipes, extras)

    results: list[EstimateResult] = []
    ess: dict[tuple[str, str], float] = {}
    fit_reports: dict[tuple[str, str], FitReport] = {}
    for stratum, indices in experiment.stratum_indices().items():
        members = experiment.subset(indices)
        by_label: dict[str, EstimateResult] = {}
        for recipe in recipes:
            columns = {
                name: np.asarray(extras[name], dtype=float)[indices] for name in recipe.columns
            }
            x = encode_covariates(
                members, columns, missing_as_level=missing_as_level, drop_all_missing=True
            )
            if not recipe.include_base:
                x = AugmentedCovariates(
                    matrix=x.extra, column_names=x.extra_names, n_base=0, provenance=x.provenance
                )
            imputations, report = impute(members, x, learner)
            result = adjusted_estimate(members, imputations, label=recipe.label, stratum=stratum)
            by_label[recipe.label] = result
            fit_reports[(stratum, recipe.label)] = report
            results.append(result)
        se_base = by_label[base_label].se
        for label, result in by_label.items():
            ess[(stratum, label)] = _ess(se_base, result.se)
        logger.info(
            f"stratum={stratum}: "
            + ", ".join(f"{label} se={result.se:.4g}" for label, result in by_label.items())
        )
    return ComparisonReport(
        results=tuple(results),
        labels=tuple(recipe.label for recipe in recipes),
        base_label=base_label,
        ess=ess,
        fit_reports=fit_reports,
    )


def render_comparison_text(report: ComparisonReport, *, digits: int = 3) -> str:
    """Aligned plain-text tables: standard errors, then ESS ratios against the base recipe."""

    def fmt(value: float) -> str:
        return f"{value:.{digits}f}"

    se = report.se_table().to_string(float_format=fmt, na_rep="-")
    ratio = report.ess_table().to_string(float_format=fmt, na_rep="-")
    return (
        "Estimator standard errors by stratum\n"
        f"{se}\n\n"
        f"Effective sample size ratio vs '{report.base_label}'\n"
        f"{ratio}\n"
    )


def write_comparison_csv(report: ComparisonReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.frame().to_csv(path, index=False)
    return path
