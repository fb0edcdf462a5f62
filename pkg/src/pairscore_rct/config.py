"""Pipeline configuration models."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource

from .data import SchemaConfig
from .errors import DataValidationError
from .evaluation import CovariateRecipe
from .imputation import LearnerConfig
from .llm import PromptTemplate, ProviderConfig, QuestionSpec
from .pairing import PairingConfig, StratifyConfig
from .simulation import McConfig

BASE_RECIPE = "base"
LLM_RECIPE = "base+llm"

# Provider fields that change how fast verdicts arrive, never which verdicts arrive.
RUNTIME_PROVIDER_FIELDS = frozenset(
    {"live", "max_in_flight", "requests_per_minute", "timeout_seconds", "max_transport_attempts"}
)


class SimulationSettings(BaseModel):
    suite: str = "default"
    n: int = Field(default=300, ge=10)
    replications: int = Field(default=1000, ge=100)
    monte_carlo: McConfig = Field(default_factory=McConfig)

    model_config = ConfigDict(extra="forbid")


class PipelineSettings(BaseSettings):
    """Run configuration from a TOML file, the environment and CLI overrides.

    Secrets are never part of the file: the Logfire token and the provider API key are read
    from the environment only, and neither enters the config digest.
    """

    data_path: Path | None = None
    dataset: SchemaConfig | None = None
    out_dir: Path = Path("runs/latest")
    seed: int = Field(default=0, ge=0)

    template: PromptTemplate = Field(default_factory=PromptTemplate)
    questions: list[QuestionSpec] = Field(default_factory=list)
    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    cache_path: Path | None = None

    learner: LearnerConfig = Field(default_factory=LearnerConfig)
    stratify: StratifyConfig = Field(default_factory=StratifyConfig)
    pairing: PairingConfig = Field(default_factory=PairingConfig)
    recipes: list[CovariateRecipe] = Field(default_factory=list)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)

    simulation: SimulationSettings = Field(default_factory=SimulationSettings)

    logfire_token: str | None = Field(default=None, exclude=True)
    log_level: str | None = None

    model_config = SettingsConfigDict(
        env_prefix="PAIRSCORE_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
    )

    @field_validator("questions")
    @classmethod
    def unique_questions(cls, value: list[QuestionSpec]) -> list[QuestionSpec]:
        ids = [question.id for question in value]
        duplicated = sorted({qid for qid in ids if ids.count(qid) > 1})
        if duplicated:
            msg = f"Duplicate question id(s): {', '.join(duplicated)}"
            raise ValueError(msg)
        return value

    @model_validator(mode="after")
    def recipes_have_base(self) -> PipelineSettings:
        if self.recipes and not any(recipe.is_base for recipe in self.recipes):
            msg = "recipes must include one with base covariates only"
            raise ValueError(msg)
        return self

    @classmethod
    def load(
        cls, path: str | Path | None = None, *, env_file: str | Path = ".env"
    ) -> PipelineSettings:
        """Settings from an optional TOML file; file values take precedence over the environment."""

        if path is None:
            return cls(_env_file=env_file)  # type: ignore[call-arg]
        path = Path(path)
        if not path.exists():
            raise DataValidationError(f"config file not found: {path}")
        values = TomlConfigSettingsSource(cls, toml_file=path)()
        settings = cls(_env_file=env_file, **values)  # type: ignore[call-arg]
        if settings.data_path is not None and not settings.data_path.is_absolute():
            settings = settings.model_copy(
                update={"data_path": (path.parent / settings.data_path).resolve()}
            )
        return settings

    def score_keys(self) -> list[str]:
        return [key for question in self.questions for key in question.score_keys()]

    def effective_recipes(self) -> list[CovariateRecipe]:
        """Configured recipes, or base alone and base plus every pair-score column."""

        if self.recipes:
            return list(self.recipes)
        return [
            CovariateRecipe(label=BASE_RECIPE),
            CovariateRecipe(label=LLM_RECIPE, columns=self.score_keys()),
        ]

    def effective_cache_path(self) -> Path:
        return self.cache_path or self.out_dir / "cache.jsonl"

    def require_dataset(self) -> tuple[Path, SchemaConfig]:
        if self.data_path is None or self.dataset is None:
            raise DataValidationError("the config needs `data_path` and a [dataset] table")
        return self.data_path, self.dataset

    def require_questions(self) -> list[QuestionSpec]:
        if not self.questions:
            raise DataValidationError("the config declares no [[questions]]")
        return list(self.questions)

    def fingerprint(self) -> dict[str, Any]:
        """Everything that can change a result; secrets and runtime knobs are left out."""

        data = self.model_dump(mode="json", exclude={"out_dir", "log_level", "cache_path"})
        for name in RUNTIME_PROVIDER_FIELDS:
            data["provider"].pop(name, None)
        return data


def digest(value: Any) -> str:
    """Stable sha256 of a JSON-serialisable value."""

    encoded = json.dumps(value, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def config_digest(settings: PipelineSettings) -> str:
    return digest(settings.fingerprint())
