"""Validated, immutable representation of a randomized experiment."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np
import pandas as pd
from loguru import logger

from ..errors import DataValidationError, EstimationError
from .schema import CovariateKind, OutcomeKind, SchemaConfig

CovariateValue = float | int | str | bool | None
"""A single covariate cell; ``None`` marks an explicitly missing value."""

MISSING_TOKENS = frozenset({"", "na", "n/a", "nan", "null"})
TRUE_TOKENS = frozenset({"1", "true", "yes", "y", "t"})
FALSE_TOKENS = frozenset({"0", "false", "no", "n", "f"})
ALL_STRATUM = "all"


@dataclass(frozen=True, slots=True)
class Unit:
    """One experimental unit with its pre-treatment information."""

    id: str
    covariates: Mapping[str, CovariateValue] = field(default_factory=dict)
    text_fields: Mapping[str, str | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "covariates", MappingProxyType(dict(self.covariates)))
        object.__setattr__(self, "text_fields", MappingProxyType(dict(self.text_fields)))

    def is_missing(self, name: str) -> bool:
        return self.covariates.get(name) is None


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class Experiment:
    """Units, assignments, outcomes and the known assignment probability.

    ``p`` is stored per unit so that designs with stratum-specific probabilities are
    represented without loss; estimators require it to be constant within the analysed set.
    """

    units: tuple[Unit, ...]
    z: np.ndarray
    y: np.ndarray
    p: np.ndarray
    outcome_kind: OutcomeKind = OutcomeKind.CONTINUOUS
    id_column: str = "id"
    covariate_kinds: Mapping[str, CovariateKind] = field(default_factory=dict)
    levels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    strata: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        units = tuple(self.units)
        n = len(units)
        z = np.asarray(self.z, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size == 1 and n > 1:
            p = np.full(n, float(p[0]))

        if n < 2:
            raise DataValidationError(f"an experiment needs at least 2 units, got {n}")
        if not (z.size == y.size == p.size == n):
            raise DataValidationError(
                f"length mismatch: units={n}, z={z.size}, y={y.size}, p={p.size}"
            )
        if not np.isin(z, (0.0, 1.0)).all():
            raise DataValidationError("treatment indicators must be 0 or 1")
        if not np.isfinite(y).all():
            raise DataValidationError("outcomes must be finite")
        if not ((p > 0.0) & (p < 1.0)).all():
            raise DataValidationError("assignment probability must lie strictly in (0, 1)")
        if self.outcome_kind is OutcomeKind.BINARY and not np.isin(y, (0.0, 1.0)).all():
            raise DataValidationError("binary outcomes must be encoded as 0/1")
        if self.strata is not None and len(self.strata) != n:
            raise DataValidationError("stratum labels must align with units")

        ids = [unit.id for unit in units]
        if len(set(ids)) != n:
            duplicated = sorted({uid for uid in ids if ids.count(uid) > 1})
            raise DataValidationError(f"duplicate unit ids: {', '.join(duplicated[:5])}")

        object.__setattr__(self, "units", units)
        object.__setattr__(self, "z", _frozen(z.astype(np.int8)))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "covariate_kinds", MappingProxyType(dict(self.covariate_kinds)))
        object.__setattr__(self, "levels", MappingProxyType(dict(self.levels)))
        if self.strata is not None:
            object.__setattr__(self, "strata", tuple(str(label) for label in self.strata))

    @classmethod
    def from_arrays(
        cls,
        z: Sequence[int] | np.ndarray,
        y: Sequence[float] | np.ndarray,
        p: float | Sequence[float] | np.ndarray,
        covariates: Mapping[str, Sequence[CovariateValue]] | None = None,
        *,
        ids: Sequence[str] | None = None,
        text_fields: Mapping[str, Sequence[str | None]] | None = None,
        strata: Sequence[str] | None = None,
        outcome_kind: OutcomeKind = OutcomeKind.CONTINUOUS,
        covariate_kinds: Mapping[str, CovariateKind] | None = None,
    ) -> Experiment:
        """Build an experiment from column arrays, inferring covariate kinds when not given."""

        n = len(z)
        ids = [str(uid) for uid in ids] if ids is not None else [str(i) for i in range(n)]
        covariates = dict(covariates or {})
        text_fields = dict(text_fields or {})
        kinds = dict(covariate_kinds or {})
        for name, values in covariates.items():
            if len(values) != n:
                raise DataValidationError(
                    f"covariate '{name}' has {len(values)} rows, expected {n}"
                )
            kinds.setdefault(name, _infer_kind(values))
        units = tuple(
            Unit(
                id=ids[i],
                covariates={name: _clean(values[i]) for name, values in covariates.items()},
                text_fields={name: values[i] for name, values in text_fields.items()},
            )
            for i in range(n)
        )
        levels = {
            name: _first_seen_levels(unit.covariates[name] for unit in units)
            for name, kind in kinds.items()
            if kind is CovariateKind.CATEGORICAL
        }
        return cls(
            units=units,
            z=np.asarray(z),
            y=np.asarray(y),
            p=np.asarray(p, dtype=float),
            outcome_kind=outcome_kind,
            covariate_kinds=kinds,
            levels=levels,
            strata=tuple(strata) if strata is not None else None,
        )

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def n_t(self) -> int:
        return int(self.z.sum())

    @property
    def n_c(self) -> int:
        return self.n - self.n_t

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(unit.id for unit in self.units)

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(self.covariate_kinds)

    def stratum_labels(self) -> tuple[str, ...]:
        """Analysis stratum for every unit (a single shared label when unstratified)."""

        return self.strata if self.strata is not None else (ALL_STRATUM,) * self.n

    def constant_p(self) -> float:
        """Return the common assignment probability, refusing mixed designs."""

        values = np.unique(self.p)
        if values.size != 1:
            raise EstimationError(
                "assignment probability is not constant; analyse each stratum separately "
                f"(found {values.size} distinct values)"
            )
        return float(values[0])

    def column(self, name: str) -> list[CovariateValue]:
        if name not in self.covariate_kinds:
            raise DataValidationError(f"unknown covariate '{name}'")
        return [unit.covariates[name] for unit in self.units]

    def subset(self, indices: Iterable[int]) -> Experiment:
        """Return the experiment restricted to `indices`, in the given order."""

        idx = np.fromiter(indices, dtype=np.intp)
        units = tuple(self.units[i] for i in idx)
        levels = {
            name: _first_seen_levels(unit.covariates[name] for unit in units)
            for name in self.levels
        }
        return Experiment(
            units=units,
            z=self.z[idx],
            y=self.y[idx],
            p=self.p[idx],
            outcome_kind=self.outcome_kind,
            id_column=self.id_column,
            covariate_kinds=self.covariate_kinds,
            levels=levels,
            strata=tuple(self.strata[i] for i in idx) if self.strata is not None else None,
        )

    def stratum_indices(self) -> dict[str, np.ndarray]:
        """Unit indices per analysis stratum, in first-appearance order."""

        groups: dict[str, list[int]] = {}
        for i, label in enumerate(self.stratum_labels()):
            groups.setdefault(label, []).append(i)
        return {label: np.asarray(members, dtype=np.intp) for label, members in groups.items()}

    def by_stratum(self) -> dict[str, Experiment]:
        if self.strata is None:
            return {ALL_STRATUM: self}
        return {label: self.subset(idx) for label, idx in self.stratum_indices().items()}


def _clean(value: object) -> CovariateValue:
    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, np.generic):
        return value.item()
    return value  # type: ignore[return-value]


def _infer_kind(values: Sequence[CovariateValue]) -> CovariateKind:
    present = [value for value in values if _clean(value) is not None]
    if present and all(isinstance(value, bool | np.bool_) for value in present):
        return CovariateKind.BOOLEAN
    if present and all(isinstance(value, str) for value in present):
        return CovariateKind.CATEGORICAL
    if present and all(
        isinstance(value, int | np.integer) and not isinstance(value, bool) for value in present
    ):
        return CovariateKind.INTEGER
    return CovariateKind.REAL


def _first_seen_levels(values: Iterable[CovariateValue]) -> tuple[str, ...]:
    levels: dict[str, None] = {}
    for value in values:
        if value is not None:
            levels.setdefault(str(value), None)
    return tuple(levels)


def _parse_cell(raw: str, kind: CovariateKind, column: str, row: int) -> CovariateValue:
    text = raw.strip()
    if text.lower() in MISSING_TOKENS:
        return None
    try:
        if kind is CovariateKind.REAL:
            return float(text)
        if kind is CovariateKind.INTEGER:
            number = float(text)
            if not number.is_integer():
                raise ValueError(text)
            return int(number)
        if kind is CovariateKind.BOOLEAN:
            lowered = text.lower()
            if lowered in TRUE_TOKENS:
                return True
            if lowered in FALSE_TOKENS:
                return False
            raise ValueError(text)
    except ValueError as exc:
        raise DataValidationError(
            f"row {row}: column '{column}' value {raw!r} is not a valid {kind.value}"
        ) from exc
    return text


def _parse_number(raw: str, column: str, row: int) -> float:
    try:
        return float(raw.strip())
    except ValueError as exc:
        raise DataValidationError(
            f"row {row}: column '{column}' value {raw!r} is not numeric"
        ) from exc


def load_experiment(path: str | Path, schema: SchemaConfig) -> Experiment:
    """Load and validate an experiment table according to `schema`."""

    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"data file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)

    missing = [column for column in schema.required_columns() if column not in frame.columns]
    if missing:
        raise DataValidationError(f"missing required column(s): {', '.join(missing)}")

    z_values: list[float] = []
    y_values: list[float] = []
    p_values: list[float] = []
    units: list[Unit] = []
    strata: list[str] | None = [] if schema.stratum_column else None

    for row_number, row in enumerate(frame.to_dict(orient="records"), start=2):
        z = _parse_number(row[schema.treatment], schema.treatment, row_number)
        if z not in (0.0, 1.0):
            raise DataValidationError(
                f"row {row_number}: treatment value {row[schema.treatment]!r} is not 0 or 1"
            )
        if row[schema.outcome].strip().lower() in MISSING_TOKENS:
            raise DataValidationError(f"row {row_number}: outcome is missing")
        y = _parse_number(row[schema.outcome], schema.outcome, row_number)
        if schema.p_column:
            p = _parse_number(row[schema.p_column], schema.p_column, row_number)
        else:
            assert schema.p is not None
            p = schema.p
        if not 0.0 < p < 1.0:
            raise DataValidationError(f"row {row_number}: assignment probability {p} not in (0, 1)")

        covariates = {
            name: _parse_cell(row[name], kind, name, row_number)
            for name, kind in schema.covariates.items()
        }
        text_fields = {
            name: (None if row[name].strip().lower() in MISSING_TOKENS else row[name])
            for name in schema.text
        }
        units.append(
            Unit(id=row[schema.id].strip(), covariates=covariates, text_fields=text_fields)
        )
        z_values.append(z)
        y_values.append(y)
        p_values.append(p)
        if strata is not None:
            assert schema.stratum_column is not None
            strata.append(row[schema.stratum_column].strip())

    levels = {
        name: _first_seen_levels(unit.covariates[name] for unit in units)
        for name, kind in schema.covariates.items()
        if kind is CovariateKind.CATEGORICAL
    }
    experiment = Experiment(
        units=tuple(units),
        z=np.asarray(z_values),
        y=np.asarray(y_values),
        p=np.asarray(p_values),
        outcome_kind=schema.outcome_kind,
        id_column=schema.id,
        covariate_kinds=dict(schema.covariates),
        levels=levels,
        strata=tuple(strata) if strata is not None else None,
    )
    check_arms(experiment)
    check_assignment_balance(experiment)
    logger.info(
        f"Loaded {experiment.n} units from {path.name} "
        f"(treated={experiment.n_t}, control={experiment.n_c})"
    )
    return experiment


def check_arms(experiment: Experiment) -> None:
    """Every analysis stratum needs at least one treated and one control unit."""

    for label, indices in experiment.stratum_indices().items():
        treated = int(experiment.z[indices].sum())
        if treated == 0 or treated == indices.size:
            where = "the experiment" if experiment.strata is None else f"stratum '{label}'"
            arm = "treated" if treated == 0 else "control"
            raise DataValidationError(f"{where} has no {arm} units")


def check_assignment_balance(experiment: Experiment) -> list[float]:
    """Warn when the treated share is implausible under the declared p.

    The check never alters p; it returns the offending p values for callers that want them.
    """

    flagged: list[float] = []
    for value in np.unique(experiment.p):
        mask = experiment.p == value
        n = int(mask.sum())
        share = float(experiment.z[mask].mean())
        tolerance = 4.0 * math.sqrt(value * (1.0 - value) / n)
        if abs(share - value) > tolerance:
            flagged.append(float(value))
            logger.warning(
                f"Treated share {share:.3f} over {n} units is far from declared p={value:.3f} "
                f"(tolerance {tolerance:.3f}); p is used as declared"
            )
    return flagged
