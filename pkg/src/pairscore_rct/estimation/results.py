"""Result records produced by the estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import norm

from ..errors import DataValidationError


def _readonly(values: np.ndarray | list[float], name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if not np.isfinite(array).all():
        raise DataValidationError(f"{name} must contain finite values only")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Imputations:
    """Per-unit predictions of both potential outcomes.

    `cross_fitted` asserts that unit i's predictions were produced without using unit i's
    own outcome and assignment (leave-one-out or out-of-bag).
    """

    y_hat_t: np.ndarray
    y_hat_c: np.ndarray
    cross_fitted: bool

    def __post_init__(self) -> None:
        y_hat_t = _readonly(self.y_hat_t, "y_hat_t")
        y_hat_c = _readonly(self.y_hat_c, "y_hat_c")
        if y_hat_t.size != y_hat_c.size:
            raise DataValidationError("y_hat_t and y_hat_c lengths differ")
        object.__setattr__(self, "y_hat_t", y_hat_t)
        object.__setattr__(self, "y_hat_c", y_hat_c)

    @classmethod
    def zeros(cls, n: int) -> Imputations:
        """Trivially cross-fitted imputations; reduce the adjusted estimator to Horvitz-Thompson."""

        return cls(y_hat_t=np.zeros(n), y_hat_c=np.zeros(n), cross_fitted=True)

    def __len__(self) -> int:
        return int(self.y_hat_t.size)

    def blend(self, p: float) -> np.ndarray:
        """m_i = p * y_hat_c_i + (1 - p) * y_hat_t_i."""

        return p * self.y_hat_c + (1.0 - p) * self.y_hat_t

    def subset(self, indices: np.ndarray) -> Imputations:
        return Imputations(
            y_hat_t=self.y_hat_t[indices],
            y_hat_c=self.y_hat_c[indices],
            cross_fitted=self.cross_fitted,
        )


@dataclass(frozen=True, eq=False)
class EstimateResult:
    """Point estimate, variance components and provenance of one estimator run."""

    tau_hat: float
    e2_c: float
    e2_t: float
    variance: float
    se: float
    n: int
    p_used: float
    covariate_set_label: str
    m_hat: np.ndarray
    stratum: str | None = None
    n_t: int = 0
    n_c: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        """Normal-approximation interval tau_hat ± z * se."""

        if not 0.0 < level < 1.0:
            raise DataValidationError(f"confidence level must be in (0, 1), got {level}")
        half_width = float(norm.ppf(0.5 + level / 2.0)) * self.se
        return self.tau_hat - half_width, self.tau_hat + half_width

    def to_row(self) -> dict[str, Any]:
        return {
            "stratum": self.stratum or "",
            "covariate_set_label": self.covariate_set_label,
            "tau_hat": self.tau_hat,
            "se": self.se,
            "e2_c": self.e2_c,
            "e2_t": self.e2_t,
            "n": self.n,
            "p": self.p_used,
        }


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """Both potential outcomes for every unit; available only in simulation."""

    y_t: np.ndarray
    y_c: np.ndarray
    latent: np.ndarray | None = None
    tau: np.ndarray | None = None

    def __post_init__(self) -> None:
        y_t = _readonly(self.y_t, "y_t")
        y_c = _readonly(self.y_c, "y_c")
        if y_t.size != y_c.size:
            raise DataValidationError("potential outcome vectors differ in length")
        object.__setattr__(self, "y_t", y_t)
        object.__setattr__(self, "y_c", y_c)
        if self.latent is not None:
            object.__setattr__(self, "latent", _readonly(self.latent, "latent"))
        if self.tau is not None:
            object.__setattr__(self, "tau", _readonly(self.tau, "tau"))

    @property
    def tau_i(self) -> np.ndarray:
        # the generating effects, when known, avoid rounding in y_t - y_c
        return self.tau if self.tau is not None else self.y_t - self.y_c

    @property
    def tau_bar(self) -> float:
        return math.fsum(self.tau_i.tolist()) / self.tau_i.size
