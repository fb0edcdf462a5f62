"""Design-based treatment-effect estimators for Bernoulli-randomized experiments."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..data import Experiment
from ..errors import DataValidationError, EstimationError
from .results import EstimateResult, Imputations, SyntheticTruth

COMPENSATED_SUM_THRESHOLD = 100_000
NO_COVARIATES = "none"


def unit_order_sum(values: np.ndarray) -> float:
    """Sum in unit order; exact (compensated) summation for large inputs."""

    items = values.tolist()
    if len(items) > COMPENSATED_SUM_THRESHOLD:
        return math.fsum(items)
    total = 0.0
    for item in items:
        total += item
    return total


@dataclass(frozen=True, slots=True)
class VarianceComponents:
    e2_c: float
    e2_t: float
    variance: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.e2_c, self.e2_t, self.variance))


def _check_arms(experiment: Experiment) -> None:
    if experiment.n_t == 0 or experiment.n_c == 0:
        raise EstimationError(
            f"both arms must be non-empty (treated={experiment.n_t}, control={experiment.n_c})"
        )


def _check_lengths(experiment: Experiment, imputations: Imputations) -> None:
    if len(imputations) != experiment.n:
        raise DataValidationError(
            f"imputations cover {len(imputations)} units, experiment has {experiment.n}"
        )


def variance_estimate(experiment: Experiment, imputations: Imputations) -> VarianceComponents:
    """Arm-wise mean squared prediction errors and the conservative variance estimate.

    Var = (1/N) [ p/(1-p) E_c^2 + (1-p)/p E_t^2 + 2 sqrt(E_c^2 E_t^2) ]
    """

    _check_arms(experiment)
    _check_lengths(experiment, imputations)
    p = experiment.constant_p()
    z = experiment.z.astype(bool)
    y = experiment.y

    residual_c = (y[~z] - imputations.y_hat_c[~z]) ** 2
    residual_t = (y[z] - imputations.y_hat_t[z]) ** 2
    e2_c = unit_order_sum(residual_c) / experiment.n_c
    e2_t = unit_order_sum(residual_t) / experiment.n_t
    variance = (
        p / (1.0 - p) * e2_c + (1.0 - p) / p * e2_t + 2.0 * math.sqrt(e2_c * e2_t)
    ) / experiment.n
    return VarianceComponents(e2_c=e2_c, e2_t=e2_t, variance=variance)


def adjusted_estimate(
    experiment: Experiment,
    imputations: Imputations,
    *,
    label: str = "adjusted",
    stratum: str | None = None,
) -> EstimateResult:
    """Imputation-adjusted Horvitz-Thompson estimate.

    tau = (1/N) sum Z (Y - m) / p - (1/N) sum (1 - Z)(Y - m) / (1 - p),
    with m_i = p * y_hat_c_i + (1 - p) * y_hat_t_i.
    """

    if not imputations.cross_fitted:
        raise EstimationError(
            "imputations are not cross-fitted; the unbiasedness guarantee requires each unit's "
            "predictions to exclude its own outcome and assignment"
        )
    _check_lengths(experiment, imputations)
    _check_arms(experiment)
    p = experiment.constant_p()
    n = experiment.n
    z = experiment.z.astype(float)

    m_hat = imputations.blend(p)
    residual = experiment.y - m_hat
    treated_term = unit_order_sum(z * residual / p) / n
    control_term = unit_order_sum((1.0 - z) * residual / (1.0 - p)) / n
    tau_hat = treated_term - control_term

    components = variance_estimate(experiment, imputations)
    m_hat.setflags(write=False)
    return EstimateResult(
        tau_hat=tau_hat,
        e2_c=components.e2_c,
        e2_t=components.e2_t,
        variance=components.variance,
        se=math.sqrt(components.variance),
        n=n,
        p_used=p,
        covariate_set_label=label,
        m_hat=m_hat,
        stratum=stratum,
        n_t=experiment.n_t,
        n_c=experiment.n_c,
    )


def ht_estimate(experiment: Experiment, *, stratum: str | None = None) -> EstimateResult:
    """Horvitz-Thompson estimate; its variance uses the same formula with zero imputations."""

    return adjusted_estimate(
        experiment, Imputations.zeros(experiment.n), label=NO_COVARIATES, stratum=stratum
    )


def ess_ratio(se_base: float, se_new: float) -> float:
    """Effective sample size ratio (se_base / se_new)^2."""

    if not (se_base > 0.0 and se_new > 0.0):
        raise DataValidationError(
            f"standard errors must be positive (se_base={se_base}, se_new={se_new})"
        )
    return (se_base / se_new) ** 2


def sample_ate(truth: SyntheticTruth) -> float:
    """Mean of the unit-level effects; only computable when both potential outcomes are known."""

    return truth.tau_bar


Imputer = Callable[[Experiment], Imputations]


def estimate_by_stratum(
    experiment: Experiment,
    imputer: Imputer | None = None,
    *,
    label: str | None = None,
) -> list[EstimateResult]:
    """Run the estimator separately in every analysis stratum; strata are never pooled.

    Without an `imputer` this is the Horvitz-Thompson estimator per stratum.
    """

    results: list[EstimateResult] = []
    for stratum, members in experiment.by_stratum().items():
        if imputer is None:
            result = ht_estimate(members, stratum=stratum)
        else:
            result = adjusted_estimate(
                members, imputer(members), label=label or "adjusted", stratum=stratum
            )
        logger.debug(
            f"stratum={stratum} set={result.covariate_set_label} "
            f"tau_hat={result.tau_hat:.4f} se={result.se:.4f}"
        )
        results.append(result)
    return results
