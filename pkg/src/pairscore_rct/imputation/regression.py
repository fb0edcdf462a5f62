"""Linear and logistic regression with Wald statistics."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.special import expit
from scipy.stats import norm

from ..data import AugmentedCovariates
from ..errors import CollinearityError, DataValidationError, ModelFitError, SeparationError

INTERCEPT = "intercept"
MAX_IRLS_ITERATIONS = 50
SCORE_TOLERANCE = 1e-8
SEPARATION_ETA = 30.0
RANK_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class RegressionFit:
    """Coefficients, standard errors and two-sided Wald p-values by column name."""

    names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    statistics: np.ndarray
    p_values: np.ndarray
    kind: str
    n: int
    iterations: int = 0

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter((self.coefficients, self.standard_errors, self.p_values))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError as exc:
            raise DataValidationError(f"no coefficient named '{name}'") from exc

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.index(name)])

    def p_value(self, name: str) -> float:
        return float(self.p_values[self.index(name)])

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "estimate": self.coefficients,
                "se": self.standard_errors,
                "statistic": self.statistics,
                "p_value": self.p_values,
            },
            index=pd.Index(self.names, name="term"),
        )


def _design(x: AugmentedCovariates, intercept: bool) -> tuple[np.ndarray, tuple[str, ...]]:
    if not np.isfinite(x.matrix).all():
        raise DataValidationError("design matrix contains non-finite values")
    if not intercept:
        return np.asarray(x.matrix, dtype=float), x.column_names
    if INTERCEPT in x.column_names:
        raise DataValidationError(f"column name '{INTERCEPT}' is reserved")
    design = np.column_stack([np.ones(x.n_rows), x.matrix])
    return design, (INTERCEPT, *x.column_names)


def check_collinearity(design: np.ndarray, names: tuple[str, ...]) -> None:
    """Raise `CollinearityError` naming a dependent column and the columns it depends on."""

    n, k = design.shape
    if k == 0:
        return
    if n < k:
        raise ModelFitError(f"{n} rows cannot identify {k} coefficients")
    _, r, pivots = linalg.qr(design, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    rank = int(np.sum(diagonal > RANK_TOLERANCE * diagonal[0]))
    if rank == k:
        return
    independent = pivots[:rank]
    dependent = int(pivots[rank])
    weights, *_ = np.linalg.lstsq(design[:, independent], design[:, dependent], rcond=None)
    involved = sorted(
        int(column) for column, w in zip(independent, weights, strict=True) if abs(w) > 1e-8
    )
    columns = tuple(names[i] for i in sorted({dependent, *involved}))
    raise CollinearityError(
        f"'{names[dependent]}' is a linear combination of other columns", columns=columns
    )


def _wald(
    names: tuple[str, ...],
    coefficients: np.ndarray,
    covariance: np.ndarray,
    kind: str,
    n: int,
    iterations: int = 0,
) -> RegressionFit:
    standard_errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        statistics = coefficients / standard_errors
    p_values = 2.0 * norm.sf(np.abs(statistics))
    return RegressionFit(
        names=names,
        coefficients=coefficients,
        standard_errors=standard_errors,
        statistics=statistics,
        p_values=p_values,
        kind=kind,
        n=n,
        iterations=iterations,
    )


def ols_fit(y: np.ndarray, x: AugmentedCovariates, *, intercept: bool = True) -> RegressionFit:
    """Ordinary least squares with homoskedastic standard errors and normal p-values."""

    y = np.asarray(y, dtype=float)
    design, names = _design(x, intercept)
    n, k = design.shape
    if y.size != n:
        raise DataValidationError(f"outcome has {y.size} rows, design has {n}")
    check_collinearity(design, names)
    if n <= k:
        raise ModelFitError(f"{n} rows leave no residual degrees of freedom for {k} coefficients")
    gram_inverse = np.linalg.inv(design.T @ design)
    coefficients = gram_inverse @ design.T @ y
    residual = y - design @ coefficients
    sigma2 = float(residual @ residual) / (n - k)
    return _wald(names, coefficients, sigma2 * gram_inverse, "linear", n)


def logistic_fit(
    y: np.ndarray,
    x: AugmentedCovariates,
    *,
    intercept: bool = True,
    max_iterations: int = MAX_IRLS_ITERATIONS,
) -> RegressionFit:
    """Logistic regression by iteratively reweighted least squares.

    Iterates from zero until the largest absolute score component falls below 1e-8.
    Divergence of the linear predictor beyond ±30 is reported as separation.
    """

    y = np.asarray(y, dtype=float)
    design, names = _design(x, intercept)
    n, k = design.shape
    if y.size != n:
        raise DataValidationError(f"outcome has {y.size} rows, design has {n}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataValidationError("logistic regression needs a 0/1 outcome")
    if y.min() == y.max():
        raise SeparationError("the outcome takes a single value")
    check_collinearity(design, names)

    beta = np.zeros(k)
    for iteration in range(1, max_iterations + 1):
        eta = design @ beta
        if np.abs(eta).max() > SEPARATION_ETA:
            raise SeparationError(
                f"linear predictor diverged after {iteration - 1} iterations; "
                "the outcome is (quasi-)separated by the covariates"
            )
        mu = expit(eta)
        weights = mu * (1.0 - mu)
        score = design.T @ (y - mu)
        information = design.T @ (design * weights[:, None])
        if np.abs(score).max() < SCORE_TOLERANCE:
            return _wald(names, beta, np.linalg.inv(information), "logistic", n, iteration)
        try:
            beta = beta + np.linalg.solve(information, score)
        except np.linalg.LinAlgError as exc:
            raise ModelFitError("information matrix became singular") from exc

    raise SeparationError(
        f"IRLS did not converge within {max_iterations} iterations; "
        "the outcome may be separated by the covariates"
    )
