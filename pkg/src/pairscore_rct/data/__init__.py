"""Experiment loading, validation and covariate encoding."""

from .encoding import AugmentedCovariates, append_columns, encode_covariates
from .experiment import (
    ALL_STRATUM,
    CovariateValue,
    Experiment,
    Unit,
    check_assignment_balance,
    load_experiment,
)
from .schema import CovariateKind, OutcomeKind, SchemaConfig

__all__ = [
    "ALL_STRATUM",
    "AugmentedCovariates",
    "CovariateKind",
    "CovariateValue",
    "Experiment",
    "OutcomeKind",
    "SchemaConfig",
    "Unit",
    "append_columns",
    "check_assignment_balance",
    "encode_covariates",
    "load_experiment",
]
