"""Named DGP variants run together, with a CSV summary."""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import logfire
import pandas as pd
from loguru import logger

from ..errors import DataValidationError
from .dgp import DgpConfig, OutcomeModel
from .monte_carlo import McConfig, McReport, monte_carlo


def default_suite(*, n: int = 300, seed: int = 0) -> list[DgpConfig]:
    """Outcome shapes, effect heterogeneity, latent informativeness and an unbalanced design."""

    return [
        DgpConfig(name="linear", n=n, seed=seed),
        DgpConfig(name="step", n=n, seed=seed, outcome_model=OutcomeModel.STEP),
        DgpConfig(name="interaction", n=n, seed=seed, outcome_model=OutcomeModel.INTERACTION),
        DgpConfig(name="heterogeneous", n=n, seed=seed, heterogeneity=0.5),
        DgpConfig(
            name="informative_latent", n=n, seed=seed, signal_share=0.8, covariate_share=0.1
        ),
        DgpConfig(name="noise_latent", n=n, seed=seed, signal_share=0.0),
        DgpConfig(name="null_effect", n=n, seed=seed, effect=0.0),
        DgpConfig(name="unbalanced", n=n, seed=seed, p=0.3),
    ]


SUITES = {"default": default_suite}


def suite_by_name(name: str, *, n: int = 300, seed: int = 0) -> list[DgpConfig]:
    try:
        factory = SUITES[name]
    except KeyError as exc:
        available = ", ".join(sorted(SUITES))
        raise DataValidationError(f"unknown suite '{name}' (available: {available})") from exc
    return factory(n=n, seed=seed)


def run_suite(
    dgps: Sequence[DgpConfig],
    config: McConfig | None = None,
    replications: int = 1000,
    *,
    master_seed: int | None = None,
) -> list[McReport]:
    reports = []
    for dgp in dgps:
        with logfire.span("simulate {dgp}", dgp=dgp.name, replications=replications):
            report = monte_carlo(dgp, config, replications, master_seed=master_seed)
        for row in report.rows:
            logger.info(
                f"{dgp.name:<20} {row.estimator:<20} bias={row.bias:+.4f} "
                f"coverage={row.coverage:.3f} var={row.empirical_variance:.4g}"
            )
        reports.append(report)
    return reports


def suite_frame(reports: Sequence[McReport]) -> pd.DataFrame:
    return pd.concat([report.frame() for report in reports], ignore_index=True)


def write_mc_csv(reports: Sequence[McReport], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suite_frame(reports).to_csv(path, index=False)
    return path
