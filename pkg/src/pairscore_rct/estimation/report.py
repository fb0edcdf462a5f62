"""Tabular export of estimator results."""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path

import pandas as pd

from .results import EstimateResult

ESTIMATE_COLUMNS = ["stratum", "covariate_set_label", "tau_hat", "se", "e2_c", "e2_t", "n", "p"]


def estimates_frame(results: Iterable[EstimateResult]) -> pd.DataFrame:
    return pd.DataFrame([result.to_row() for result in results], columns=ESTIMATE_COLUMNS)


def write_estimates_csv(results: Iterable[EstimateResult], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    estimates_frame(results).to_csv(path, index=False)
    return path
