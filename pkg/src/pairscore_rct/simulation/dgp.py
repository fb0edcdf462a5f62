"""Synthetic data-generating processes with known potential outcomes."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..data import CovariateKind, Experiment
from ..errors import DataValidationError
from ..estimation import SyntheticTruth

MAX_ASSIGNMENT_DRAWS = 1000


class OutcomeModel(str, Enum):
    LINEAR = "linear"
    STEP = "step"
    INTERACTION = "interaction"


class DgpConfig(BaseModel):
    """Finite population with `k` iid standard normal covariates and one hidden latent quality.

    The control outcome is ``scale * (a f(x) + b u + c e)`` with unit-variance parts, where
    ``a² = covariate_share``, ``b² = signal_share`` (the latent `u` the mock model sees) and
    ``c² = 1 - a² - b²``. The unit effect is ``effect + heterogeneity * x1``.
    """

    name: str = "linear"
    n: int = Field(default=300, ge=10)
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    k: int = Field(default=3, ge=1)
    outcome_model: OutcomeModel = OutcomeModel.LINEAR
    effect: float = 1.0
    heterogeneity: float = 0.0
    signal_share: float = Field(default=0.5, ge=0.0, le=1.0)
    covariate_share: float = Field(default=0.3, ge=0.0, le=1.0)
    scale: float = Field(default=1.0, gt=0.0)
    seed: int = Field(default=0, ge=0)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def shares_fit(self) -> DgpConfig:
        if self.signal_share + self.covariate_share > 1.0 + 1e-12:
            msg = "signal_share + covariate_share must not exceed 1"
            raise ValueError(msg)
        return self

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(f"x{j}" for j in range(1, self.k + 1))


def _signal(model: OutcomeModel, x: np.ndarray) -> np.ndarray:
    """Unit-variance function of the covariates."""

    if model is OutcomeModel.LINEAR:
        return x.sum(axis=1) / math.sqrt(x.shape[1])
    if model is OutcomeModel.STEP:
        return np.where(x[:, 0] > 0.0, 1.0, -1.0)
    if x.shape[1] >= 2:
        return (x[:, 0] * x[:, 1] + x[:, 0]) / math.sqrt(2.0)
    return (x[:, 0] ** 2 - 1.0) / math.sqrt(2.0)


def draw_population(
    dgp: DgpConfig, rng: np.random.Generator
) -> tuple[np.ndarray, SyntheticTruth]:
    """Covariates and both potential outcomes for every unit."""

    x = rng.standard_normal((dgp.n, dgp.k))
    latent = rng.standard_normal(dgp.n)
    noise = rng.standard_normal(dgp.n)
    a = math.sqrt(dgp.covariate_share)
    b = math.sqrt(dgp.signal_share)
    c = math.sqrt(max(0.0, 1.0 - dgp.covariate_share - dgp.signal_share))

    y_c = dgp.scale * (a * _signal(dgp.outcome_model, x) + b * latent + c * noise)
    tau = dgp.effect + dgp.heterogeneity * x[:, 0]
    truth = SyntheticTruth(y_t=y_c + tau, y_c=y_c, latent=latent, tau=tau)
    return x, truth


def assign(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(p) assignment, redrawn while an arm is empty."""

    for draw in range(1, MAX_ASSIGNMENT_DRAWS + 1):
        z = (rng.random(n) < p).astype(np.int8)
        if 0 < int(z.sum()) < n:
            if draw > 1:
                logger.debug(f"Assignment redrawn {draw - 1} time(s) to avoid an empty arm")
            return z
    raise DataValidationError(f"could not draw a non-degenerate assignment for n={n}, p={p}")


def build_experiment(
    dgp: DgpConfig, x: np.ndarray, truth: SyntheticTruth, z: np.ndarray
) -> Experiment:
    y = np.where(z == 1, truth.y_t, truth.y_c)
    width = len(str(dgp.n))
    return Experiment.from_arrays(
        z=z,
        y=y,
        p=dgp.p,
        covariates={name: x[:, j].tolist() for j, name in enumerate(dgp.covariate_names)},
        ids=[f"u{i:0{width}d}" for i in range(1, dgp.n + 1)],
        covariate_kinds={name: CovariateKind.REAL for name in dgp.covariate_names},
    )


def generate(dgp: DgpConfig) -> tuple[Experiment, SyntheticTruth]:
    """Draw the population once, then the assignment, from the config seed."""

    rng = np.random.default_rng(dgp.seed)
    x, truth = draw_population(dgp, rng)
    z = assign(dgp.n, dgp.p, rng)
    return build_experiment(dgp, x, truth, z), truth
