"""Leave-one-out least squares imputation via the hat-matrix identity.

For a fit with Gram matrix A (XᵀX, optionally ridge-penalized), coefficients β and
leverages h_i = x_iᵀ A⁻¹ x_i, the coefficients refit without row i are

    β₋ᵢ = β − A⁻¹ x_i r_i / (1 − h_i),

so every unit's own-arm prediction excludes its own outcome without refitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..data import AugmentedCovariates, Experiment
from ..errors import DataValidationError, ModelFitError
from ..estimation import Imputations
from .base import FitReport, LearnerConfig, LearnerKind, learner

RIDGE_PENALTY = 1e-6
OLS_LEVERAGE_CEILING = 1.0 - 1e-8
RIDGE_LEVERAGE_CEILING = 1.0 - 1e-12


@dataclass(frozen=True, eq=False)
class LooSolution:
    """A least squares fit with the quantities needed for leave-one-out refits."""

    coef: np.ndarray
    influence: np.ndarray  # A⁻¹ Xᵀ, shape (k, n)
    leverage: np.ndarray
    residual: np.ndarray
    method: str

    @property
    def loo_scale(self) -> np.ndarray:
        return self.residual / (1.0 - self.leverage)

    def loo_coefficients(self) -> np.ndarray:
        """Row i holds the coefficients fitted without training row i."""

        return self.coef[None, :] - (self.influence * self.loo_scale[None, :]).T

    def loo_fitted(self, design: np.ndarray) -> np.ndarray:
        """Prediction for each training row from the fit that excluded it."""

        return design @ self.coef - self.leverage * self.loo_scale


def _solve(design: np.ndarray, y: np.ndarray, penalty: float, method: str) -> LooSolution | None:
    n, k = design.shape
    gram = design.T @ design
    if penalty > 0.0:
        # intercept is the first column and stays unpenalized
        gram = gram + penalty * np.diag(np.r_[0.0, np.ones(k - 1)])
        ceiling = RIDGE_LEVERAGE_CEILING
    else:
        if n <= k or np.linalg.matrix_rank(design) < k:
            return None
        ceiling = OLS_LEVERAGE_CEILING
    try:
        influence = np.linalg.solve(gram, design.T)
    except np.linalg.LinAlgError:
        return None
    leverage = np.einsum("ij,ji->i", design, influence)
    if not np.isfinite(leverage).all() or leverage.max() >= ceiling:
        return None
    coef = influence @ y
    residual = y - design @ coef
    return LooSolution(coef, influence, leverage, residual, method)


def fit_loo(design: np.ndarray, y: np.ndarray, *, fallback_columns: int = 1) -> LooSolution:
    """Fit with the fallback chain: full least squares, tiny ridge, then the leading
    `fallback_columns` only (the intercept by default). Coefficients of columns dropped by
    the last step are zero so predictions still use the full design.
    """

    n, k = design.shape
    if n < 2:
        raise ModelFitError(f"leave-one-out fitting needs at least 2 rows, got {n}")
    for method, penalty in (("ols", 0.0), ("ridge", RIDGE_PENALTY)):
        if method == "ridge" and k == 1:
            continue
        solution = _solve(design, y, penalty, method)
        if solution is not None:
            return solution

    reduced = _solve(design[:, :fallback_columns], y, 0.0, "intercept")
    if reduced is None:
        raise ModelFitError(
            f"design is rank-deficient even after fallback ({n} rows, {k} columns)"
        )
    coef = np.zeros(k)
    coef[:fallback_columns] = reduced.coef
    influence = np.zeros((k, n))
    influence[:fallback_columns] = reduced.influence
    return LooSolution(coef, influence, reduced.leverage, reduced.residual, reduced.method)


def _nonzero_columns(matrix: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.any(matrix != 0.0, axis=0))


def _with_intercept(matrix: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(matrix.shape[0]), matrix])


def _check_inputs(experiment: Experiment, x: AugmentedCovariates) -> None:
    if x.n_rows != experiment.n:
        raise DataValidationError(
            f"design has {x.n_rows} rows but the experiment has {experiment.n} units"
        )
    if not np.isfinite(x.matrix).all():
        raise DataValidationError("design matrix contains non-finite values")


def _per_arm(experiment: Experiment, x: AugmentedCovariates) -> tuple[Imputations, dict, dict]:
    z = experiment.z.astype(bool)
    predictions = {True: np.empty(experiment.n), False: np.empty(experiment.n)}
    mse: dict[str, float] = {}
    methods: dict[str, str] = {}

    for arm, label in ((True, "treated"), (False, "control")):
        own = np.flatnonzero(z == arm)
        other = np.flatnonzero(z != arm)
        if own.size < 2:
            raise ModelFitError(f"the {label} arm has {own.size} unit(s); at least 2 are needed")
        keep = _nonzero_columns(x.matrix[own])
        design = _with_intercept(x.matrix[np.ix_(own, keep)])
        solution = fit_loo(design, experiment.y[own])

        loo = solution.loo_fitted(design)
        predictions[arm][own] = loo
        predictions[arm][other] = _with_intercept(x.matrix[np.ix_(other, keep)]) @ solution.coef
        mse[label] = float(np.mean((experiment.y[own] - loo) ** 2))
        methods[label] = solution.method
        if solution.method != "ols":
            logger.debug(f"{label} arm fell back to {solution.method} ({own.size} units)")

    imputations = Imputations(
        y_hat_t=predictions[True], y_hat_c=predictions[False], cross_fitted=True
    )
    return imputations, mse, methods


def _pooled(experiment: Experiment, x: AugmentedCovariates) -> tuple[Imputations, dict, dict]:
    z = experiment.z.astype(float)
    keep = _nonzero_columns(x.matrix)
    covariates = x.matrix[:, keep]
    design = np.column_stack([np.ones(experiment.n), z, covariates])
    solution = fit_loo(design, experiment.y, fallback_columns=2)

    loo_coef = solution.loo_coefficients()
    treated = np.column_stack([np.ones(experiment.n), np.ones(experiment.n), covariates])
    control = np.column_stack([np.ones(experiment.n), np.zeros(experiment.n), covariates])
    y_hat_t = np.einsum("ij,ij->i", treated, loo_coef)
    y_hat_c = np.einsum("ij,ij->i", control, loo_coef)

    loo = solution.loo_fitted(design)
    mse = {"pooled": float(np.mean((experiment.y - loo) ** 2))}
    imputations = Imputations(y_hat_t=y_hat_t, y_hat_c=y_hat_c, cross_fitted=True)
    return imputations, mse, {"pooled": solution.method}


@learner(LearnerKind.LOO_LINEAR)
def fit_loo_linear(
    experiment: Experiment, x: AugmentedCovariates, config: LearnerConfig
) -> tuple[Imputations, FitReport]:
    """Leave-one-out linear imputations together with their fit report."""

    _check_inputs(experiment, x)
    fit = _per_arm if config.per_arm else _pooled
    imputations, mse, methods = fit(experiment, x)
    return imputations, FitReport(learner=config, mse=mse, method=methods)


def loo_linear_impute(
    experiment: Experiment, x: AugmentedCovariates, config: LearnerConfig | None = None
) -> Imputations:
    """Cross-fitted imputations from leave-one-out least squares.

    With per-arm fitting (the default) each arm gets its own intercept plus linear model:
    units in the fitted arm receive the prediction from the fit without their own row, and
    units of the other arm receive the full-fit prediction, which never uses their outcome.
    """

    return fit_loo_linear(experiment, x, config or LearnerConfig())[0]
