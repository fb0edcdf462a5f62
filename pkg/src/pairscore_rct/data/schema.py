"""Column-role schema for experiment tables."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CovariateKind(str, Enum):
    """Value types a covariate column may hold."""

    REAL = "real"
    INTEGER = "integer"
    CATEGORICAL = "categorical"
    BOOLEAN = "boolean"


class OutcomeKind(str, Enum):
    """Outcome scale; binary outcomes are stored as 0/1 reals."""

    CONTINUOUS = "continuous"
    BINARY = "binary"


class SchemaConfig(BaseModel):
    """Maps table columns to experiment roles.

    Exactly one of `p` (a design-wide assignment probability) or `p_column` (a per-row
    probability, typically constant within a stratum) must be given.
    """

    id: str
    treatment: str
    outcome: str
    outcome_kind: OutcomeKind = OutcomeKind.CONTINUOUS
    p: float | None = Field(default=None, gt=0.0, lt=1.0)
    p_column: str | None = None
    stratum_column: str | None = None
    covariates: dict[str, CovariateKind] = Field(default_factory=dict)
    text: list[str] = Field(default_factory=list)
    missing_as_level: bool = False

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def check_roles(self) -> SchemaConfig:
        if (self.p is None) == (self.p_column is None):
            msg = "Exactly one of 'p' or 'p_column' must be configured"
            raise ValueError(msg)

        roles = [self.id, self.treatment, self.outcome, *self.covariates, *self.text]
        if self.p_column:
            roles.append(self.p_column)
        duplicated = sorted({name for name in roles if roles.count(name) > 1})
        if duplicated:
            msg = f"Columns assigned to more than one role: {', '.join(duplicated)}"
            raise ValueError(msg)
        return self

    def required_columns(self) -> list[str]:
        """Every column the table must provide."""

        columns = [self.id, self.treatment, self.outcome, *self.covariates, *self.text]
        if self.p_column:
            columns.append(self.p_column)
        if self.stratum_column and self.stratum_column not in columns:
            columns.append(self.stratum_column)
        return columns
