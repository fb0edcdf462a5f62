"""Cross-fitted outcome imputation and regression fits."""

from .base import (
    FitReport,
    ForestParams,
    Learner,
    LearnerConfig,
    LearnerKind,
    available_learners,
    impute,
    learner,
    register_learner,
)
from .forest import Forest, RegressionTree, fit_forest, rf_impute
from .linear import LooSolution, fit_loo, fit_loo_linear, loo_linear_impute
from .regression import INTERCEPT, RegressionFit, check_collinearity, logistic_fit, ols_fit

__all__ = [
    "INTERCEPT",
    "FitReport",
    "Forest",
    "ForestParams",
    "Learner",
    "LearnerConfig",
    "LearnerKind",
    "LooSolution",
    "RegressionFit",
    "RegressionTree",
    "available_learners",
    "check_collinearity",
    "fit_forest",
    "fit_loo",
    "fit_loo_linear",
    "impute",
    "learner",
    "logistic_fit",
    "loo_linear_impute",
    "ols_fit",
    "register_learner",
    "rf_impute",
]
