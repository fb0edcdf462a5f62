"""Design-matrix encoding of unit covariates plus appended real columns."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from loguru import logger

from ..errors import DataValidationError
from .experiment import Experiment
from .schema import CovariateKind

MISSING_SUFFIX = "_missing"
UNKNOWN_LEVEL = "unknown"

ExtraColumn = Sequence[float | None] | np.ndarray


@dataclass(frozen=True, eq=False)
class AugmentedCovariates:
    """Row-aligned design matrix: encoded base covariates followed by appended columns."""

    matrix: np.ndarray
    column_names: tuple[str, ...]
    n_base: int
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.column_names):
            raise DataValidationError("matrix shape does not match column names")
        if len(set(self.column_names)) != len(self.column_names):
            raise DataValidationError("design column names must be unique")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "provenance", MappingProxyType(dict(self.provenance)))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    @property
    def base(self) -> np.ndarray:
        return self.matrix[:, : self.n_base]

    @property
    def extra(self) -> np.ndarray:
        return self.matrix[:, self.n_base :]

    @property
    def extra_names(self) -> tuple[str, ...]:
        return self.column_names[self.n_base :]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.matrix[:, self.column_names.index(name)]
        except ValueError as exc:
            raise DataValidationError(f"unknown design column '{name}'") from exc

    def rows(self, indices: np.ndarray | Sequence[int]) -> AugmentedCovariates:
        return AugmentedCovariates(
            matrix=self.matrix[np.asarray(indices, dtype=np.intp)],
            column_names=self.column_names,
            n_base=self.n_base,
            provenance=self.provenance,
        )

    def base_only(self) -> AugmentedCovariates:
        return AugmentedCovariates(
            matrix=self.base, column_names=self.column_names[: self.n_base], n_base=self.n_base
        )


def encode_covariates(
    experiment: Experiment,
    extras: Mapping[str, ExtraColumn] | None = None,
    *,
    provenance: Mapping[str, str] | None = None,
    missing_as_level: bool = False,
    drop_all_missing: bool = False,
) -> AugmentedCovariates:
    """Encode unit covariates and append `extras` as real columns.

    Categorical covariates are one-hot encoded with the first-seen level dropped as
    reference. Missing numeric and boolean values become 0 with a ``<name>_missing``
    indicator; missing categorical values get the same indicator, or an ``unknown`` level
    when `missing_as_level` is set. A covariate missing for every unit is an error, or is
    left out with a warning when `drop_all_missing` is set. The encoding is a pure function of
    its inputs.
    """

    columns: list[np.ndarray] = []
    names: list[str] = []

    for name, kind in experiment.covariate_kinds.items():
        values = experiment.column(name)
        missing = np.array([value is None for value in values])
        if missing.all():
            if drop_all_missing:
                logger.warning(f"Covariate '{name}' is missing for every unit and is left out")
                continue
            raise DataValidationError(f"covariate '{name}' is missing for every unit")

        if kind is CovariateKind.CATEGORICAL:
            levels = experiment.levels.get(name) or _levels(values)
            for level in levels[1:]:
                columns.append(np.array([value == level for value in values], dtype=float))
                names.append(f"{name}_{level}")
            if missing.any():
                columns.append(missing.astype(float))
                indicator = f"{name}_{UNKNOWN_LEVEL}" if missing_as_level else name + MISSING_SUFFIX
                names.append(indicator)
            continue

        numeric = np.array([0.0 if value is None else float(value) for value in values])
        columns.append(numeric)
        names.append(name)
        if missing.any():
            columns.append(missing.astype(float))
            names.append(name + MISSING_SUFFIX)

    kept = [i for i, column in enumerate(columns) if np.any(column != 0.0)]
    if len(kept) != len(columns):
        dropped = [names[i] for i in range(len(columns)) if i not in kept]
        logger.debug(f"Dropping constant-zero design columns: {', '.join(dropped)}")
    base = (
        np.column_stack([columns[i] for i in kept])
        if kept
        else np.empty((experiment.n, 0), dtype=float)
    )
    encoded = AugmentedCovariates(
        matrix=base, column_names=tuple(names[i] for i in kept), n_base=len(kept)
    )
    if extras:
        encoded = append_columns(
            encoded, extras, provenance=provenance, drop_all_missing=drop_all_missing
        )
    return encoded


def append_columns(
    x: AugmentedCovariates,
    extras: Mapping[str, ExtraColumn],
    *,
    provenance: Mapping[str, str] | None = None,
    drop_all_missing: bool = False,
) -> AugmentedCovariates:
    """Append real columns; missing entries (None/NaN) become 0 plus a missing indicator."""

    provenance = dict(provenance or {})
    columns = [x.matrix]
    names = list(x.column_names)
    recorded = dict(x.provenance)

    for name, raw in extras.items():
        values = np.array(
            [math.nan if value is None else float(value) for value in raw], dtype=float
        )
        if values.size != x.n_rows:
            raise DataValidationError(
                f"extra column '{name}' has {values.size} rows, expected {x.n_rows}"
            )
        missing = np.isnan(values)
        if missing.all():
            if drop_all_missing:
                logger.warning(f"Column '{name}' is missing for every unit and is left out")
                continue
            raise DataValidationError(f"extra column '{name}' is missing for every unit")
        columns.append(np.where(missing, 0.0, values)[:, None])
        names.append(name)
        recorded[name] = provenance.get(name, "appended")
        if missing.any():
            columns.append(missing.astype(float)[:, None])
            names.append(name + MISSING_SUFFIX)
            recorded[name + MISSING_SUFFIX] = f"missing indicator for {name}"

    return AugmentedCovariates(
        matrix=np.hstack(columns),
        column_names=tuple(names),
        n_base=x.n_base,
        provenance=recorded,
    )


def _levels(values: Sequence[object]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for value in values:
        if value is not None:
            seen.setdefault(str(value), None)
    return tuple(seen)
