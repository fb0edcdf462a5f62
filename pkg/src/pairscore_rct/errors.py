"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(slots=True)
class PairScoreError(Exception):
    """Base class for every error raised by pairscore-rct."""

    reason: str

    def __str__(self) -> str:
        return self.reason


@dataclass(slots=True)
class DataValidationError(PairScoreError):
    """Raised when input data or configuration violates the experiment contract."""

    def __str__(self) -> str:
        return f"Invalid input: {self.reason}"


@dataclass(slots=True)
class EstimationError(PairScoreError):
    """Raised when an estimator is undefined for the given design (e.g. an empty arm)."""

    def __str__(self) -> str:
        return f"Estimation failed: {self.reason}"


@dataclass(slots=True)
class ModelFitError(PairScoreError):
    """Raised when an imputation or evaluation model cannot be fitted."""

    def __str__(self) -> str:
        return f"Model fit failed: {self.reason}"


@dataclass(slots=True)
class CollinearityError(ModelFitError):
    """Raised when design columns are linearly dependent."""

    columns: tuple[str, ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        return f"Collinear columns ({', '.join(self.columns)}): {self.reason}"


@dataclass(slots=True)
class SeparationError(ModelFitError):
    """Raised when logistic regression diverges because the classes are separable."""


@dataclass(slots=True)
class OobCoverageError(ModelFitError):
    """Raised when some unit is in-bag for every tree of its arm's forest."""

    unit_ids: tuple[str, ...] = field(default_factory=tuple)


@dataclass(slots=True)
class ProviderError(PairScoreError):
    """Raised when an LLM provider fails at the transport level."""

    def __str__(self) -> str:
        return f"Provider error: {self.reason}"


@dataclass(slots=True)
class LiveCallRefused(ProviderError):
    """Raised when a live provider is requested without the explicit live opt-in."""


@dataclass(slots=True)
class StageError(PairScoreError):
    """Raised when a pipeline stage cannot run (missing upstream output, digest mismatch)."""

    stage: str = ""

    def __str__(self) -> str:
        prefix = f"Stage '{self.stage}'" if self.stage else "Stage"
        return f"{prefix}: {self.reason}"
