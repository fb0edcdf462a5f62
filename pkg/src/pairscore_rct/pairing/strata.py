"""Partitioning units into comparison strata."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import DataValidationError


class StratificationBasis(str, Enum):
    """What the strata are built from."""

    OOB_PREDICTION_QUANTILES = "oob_prediction_quantiles"
    CATEGORICAL_COLUMN = "categorical_column"
    NONE = "none"


class GroupSpec(BaseModel):
    """Either a number of groups or a target group size."""

    n_groups: int | None = Field(default=None, ge=1)
    group_size: int | None = Field(default=None, ge=1)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def exactly_one(self) -> GroupSpec:
        if (self.n_groups is None) == (self.group_size is None):
            msg = "specify exactly one of n_groups or group_size"
            raise ValueError(msg)
        return self

    def groups_for(self, n: int) -> int:
        if self.group_size is not None:
            if self.group_size > n:
                raise DataValidationError(f"group_size={self.group_size} exceeds N={n}")
            return math.ceil(n / self.group_size)
        assert self.n_groups is not None
        if self.n_groups > n:
            raise DataValidationError(f"n_groups={self.n_groups} exceeds N={n}")
        return self.n_groups


class StratifyConfig(BaseModel):
    """How the pipeline stratifies units before pairing.

    `column` names the categorical covariate (categorical basis) or an optional column of
    precomputed predictions (quantile basis); without it the quantile basis uses out-of-bag
    predictions of the base covariate model.
    """

    basis: StratificationBasis = StratificationBasis.OOB_PREDICTION_QUANTILES
    groups: GroupSpec = Field(default_factory=lambda: GroupSpec(n_groups=10))
    column: str | None = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def column_for_categorical(self) -> StratifyConfig:
        if self.basis is StratificationBasis.CATEGORICAL_COLUMN and not self.column:
            msg = "the categorical_column basis needs `column`"
            raise ValueError(msg)
        return self


@dataclass(frozen=True)
class StratumAssignment:
    """Stratum label for every unit, aligned with `unit_ids`."""

    stratum_of: tuple[str, ...]
    unit_ids: tuple[str, ...]
    basis: StratificationBasis
    group_spec: GroupSpec | None = None

    def __post_init__(self) -> None:
        if len(self.stratum_of) != len(self.unit_ids):
            raise DataValidationError("stratum labels and unit ids differ in length")
        if len(set(self.unit_ids)) != len(self.unit_ids):
            raise DataValidationError("unit ids must be unique")

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    def labels(self) -> tuple[str, ...]:
        """Stratum labels in first-appearance order."""

        return tuple(dict.fromkeys(self.stratum_of))

    def members(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {label: [] for label in self.labels()}
        for index, label in enumerate(self.stratum_of):
            groups[label].append(index)
        return groups

    def sizes(self) -> dict[str, int]:
        return {label: len(indices) for label, indices in self.members().items()}

    def stratum_for(self, unit_id: str) -> str:
        try:
            return self.stratum_of[self.unit_ids.index(unit_id)]
        except ValueError as exc:
            raise DataValidationError(f"unit '{unit_id}' has no stratum") from exc

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"unit_id": self.unit_ids, "stratum": self.stratum_of})

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def read_csv(
        cls, path: str | Path, basis: StratificationBasis = StratificationBasis.NONE
    ) -> StratumAssignment:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        missing = {"unit_id", "stratum"} - set(frame.columns)
        if missing:
            raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
        return cls(
            stratum_of=tuple(frame["stratum"]),
            unit_ids=tuple(frame["unit_id"]),
            basis=basis,
        )


def _default_ids(n: int, unit_ids: Sequence[str] | None) -> tuple[str, ...]:
    if unit_ids is None:
        return tuple(str(i) for i in range(n))
    if len(unit_ids) != n:
        raise DataValidationError(f"{len(unit_ids)} unit ids for {n} values")
    return tuple(unit_ids)


def stratify(
    values: Sequence[float] | np.ndarray,
    group_spec: GroupSpec,
    *,
    unit_ids: Sequence[str] | None = None,
) -> StratumAssignment:
    """Sort units by value (ties by unit index) and cut into contiguous groups of equal size ±1."""

    array = np.asarray(values, dtype=float).reshape(-1)
    n = array.size
    if n == 0:
        raise DataValidationError("cannot stratify an empty set of units")
    if not np.isfinite(array).all():
        raise DataValidationError("stratification values must be finite")
    n_groups = group_spec.groups_for(n)

    order = np.argsort(array, kind="stable")
    width = len(str(n_groups))
    labels = [""] * n
    for group, chunk in enumerate(np.array_split(order, n_groups), start=1):
        for index in chunk:
            labels[int(index)] = f"g{group:0{width}d}"
    return StratumAssignment(
        stratum_of=tuple(labels),
        unit_ids=_default_ids(n, unit_ids),
        basis=StratificationBasis.OOB_PREDICTION_QUANTILES,
        group_spec=group_spec,
    )


def stratify_by_label(
    labels: Sequence[object], *, unit_ids: Sequence[str] | None = None
) -> StratumAssignment:
    """One stratum per distinct categorical level; a missing level forms its own stratum."""

    stratum_of = tuple("missing" if label is None else str(label) for label in labels)
    return StratumAssignment(
        stratum_of=stratum_of,
        unit_ids=_default_ids(len(stratum_of), unit_ids),
        basis=StratificationBasis.CATEGORICAL_COLUMN,
    )


def single_stratum(unit_ids: Sequence[str], label: str = "all") -> StratumAssignment:
    return StratumAssignment(
        stratum_of=(label,) * len(unit_ids),
        unit_ids=tuple(unit_ids),
        basis=StratificationBasis.NONE,
    )
