"""Learner configuration, fit reports and the learner registry."""

from __future__ import annotations

import math
from collections.abc import Callable
from enum import Enum
from typing import TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..data import AugmentedCovariates, Experiment
from ..errors import DataValidationError
from ..estimation import Imputations


class LearnerKind(str, Enum):
    """Supported cross-fitted outcome learners."""

    LOO_LINEAR = "loo_linear"
    RANDOM_FOREST = "random_forest"


class ForestParams(BaseModel):
    """Random forest hyperparameters; `mtry` defaults to ceil(columns / 3)."""

    n_trees: int = Field(default=500, ge=1)
    mtry: int | None = Field(default=None, ge=1)
    min_leaf: int = Field(default=5, ge=1)
    max_depth: int | None = Field(default=None, ge=0)
    seed: int | None = None
    n_jobs: int = Field(default=1, ge=1)

    model_config = ConfigDict(extra="forbid")

    def resolve_mtry(self, n_columns: int) -> int:
        if n_columns == 0:
            return 0
        if self.mtry is None:
            return max(1, math.ceil(n_columns / 3))
        if self.mtry > n_columns:
            raise DataValidationError(
                f"mtry={self.mtry} exceeds the number of design columns ({n_columns})"
            )
        return self.mtry


class LearnerConfig(BaseModel):
    """Which learner to use and how; `per_arm` fits treated and control units separately."""

    kind: LearnerKind = LearnerKind.LOO_LINEAR
    rf: ForestParams = Field(default_factory=ForestParams)
    per_arm: bool = True

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def require_forest_seed(self) -> LearnerConfig:
        if self.kind is LearnerKind.RANDOM_FOREST and self.rf.seed is None:
            msg = "random_forest learners require an explicit rf.seed"
            raise ValueError(msg)
        return self


class FitReport(BaseModel):
    """Diagnostics of one imputation fit.

    `mse` holds the leave-one-out or out-of-bag mean squared error per arm
    (keys ``treated``/``control``, or ``pooled``). `importance` is the forest's
    sum-normalized mean decrease in impurity per design column.
    """

    learner: LearnerConfig
    mse: dict[str, float]
    importance: dict[str, float] | None = None
    method: dict[str, str] = Field(default_factory=dict)

    @field_validator("mse")
    @classmethod
    def non_negative(cls, value: dict[str, float]) -> dict[str, float]:
        if any(mse < 0 for mse in value.values()):
            msg = "mean squared errors must be non-negative"
            raise ValueError(msg)
        return value


Learner = Callable[[Experiment, AugmentedCovariates, LearnerConfig], tuple[Imputations, FitReport]]


_REGISTRY: dict[str, Learner] = {}


def register_learner(kind: LearnerKind | str, fit: Learner) -> None:
    """Register a learner implementation under its kind."""

    key = kind.value if isinstance(kind, LearnerKind) else str(kind)
    _REGISTRY[key] = fit


TLearner = TypeVar("TLearner", bound=Learner)


def learner(kind: LearnerKind | str) -> Callable[[TLearner], TLearner]:
    """Decorator registering a learner function."""

    def decorator(fit: TLearner) -> TLearner:
        register_learner(kind, fit)
        return fit

    return decorator


def available_learners() -> dict[str, Learner]:
    """Return a copy of the registered learner mapping."""

    return dict(_REGISTRY)


def impute(
    experiment: Experiment, x: AugmentedCovariates, config: LearnerConfig
) -> tuple[Imputations, FitReport]:
    """Produce cross-fitted imputations with the configured learner."""

    if x.n_rows != experiment.n:
        raise DataValidationError(
            f"design has {x.n_rows} rows but the experiment has {experiment.n} units"
        )
    key = config.kind.value
    if key not in _REGISTRY:
        raise DataValidationError(
            f"Unknown learner '{key}'. Available: {', '.join(sorted(_REGISTRY))}"
        )
    return _REGISTRY[key](experiment, x, config)
