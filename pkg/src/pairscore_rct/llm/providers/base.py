"""Provider configuration, request records and the provider registry."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ...errors import ProviderError
from ..questions import QuestionSpec


class ProviderKind(str, Enum):
    HTTP_CHAT = "http_chat"
    MOCK = "mock"


class MockSettings(BaseModel):
    """Deterministic stand-in for a language model.

    Latent scores come from `latent` (unit id -> score) or, in the pipeline, from the
    covariate named by `latent_column`.
    """

    latent: dict[str, float] = Field(default_factory=dict)
    latent_column: str | None = None
    noise_scale: float = Field(default=1.0, ge=0.0)
    refusal_rate: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)

    model_config = ConfigDict(extra="forbid")


class ProviderConfig(BaseModel):
    """Where verdicts come from and how fast they may be requested."""

    kind: ProviderKind = ProviderKind.MOCK
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-mini"
    api_key_env: str = "OPENAI_API_KEY"
    max_in_flight: int = Field(default=8, ge=1)
    requests_per_minute: float | None = Field(default=None, gt=0)
    temperature: float = Field(default=0.0, ge=0.0)
    timeout_seconds: float = Field(default=60.0, gt=0)
    max_transport_attempts: int = Field(default=5, ge=1)
    backoff_seconds: float = Field(default=1.0, ge=0.0)
    live: bool = False
    mock: MockSettings = Field(default_factory=MockSettings)

    model_config = ConfigDict(extra="forbid")

    @field_validator("kind", mode="before")
    @classmethod
    def accept_short_names(cls, value: Any) -> Any:
        if isinstance(value, str) and value.lower() == "http":
            return ProviderKind.HTTP_CHAT
        return value


@dataclass(frozen=True, slots=True)
class CompletionRequest:
    """One prompt to answer; `first`/`second` are unit ids in presentation order."""

    prompt: str
    system: str
    first: str
    second: str
    question: QuestionSpec
    attempt: int = 1


class BaseProvider(ABC):
    """Answers rendered comparison prompts."""

    kind: ProviderKind

    def __init__(self, config: ProviderConfig) -> None:
        self.config = config

    @property
    def model(self) -> str:
        return self.config.model

    @abstractmethod
    async def complete(self, request: CompletionRequest) -> str:
        """Return the raw answer text; transport failures raise `ProviderError`."""

    async def aclose(self) -> None:
        return None


ProviderFactory = Callable[..., BaseProvider]


_REGISTRY: dict[str, ProviderFactory] = {}


def register_provider(kind: ProviderKind | str, factory: ProviderFactory) -> None:
    """Register a provider factory under its kind."""

    key = kind.value if isinstance(kind, ProviderKind) else str(kind).lower()
    _REGISTRY[key] = factory


def create_provider(config: ProviderConfig, **kwargs: Any) -> BaseProvider:
    """Instantiate the provider named by `config.kind`."""

    key = config.kind.value
    if key not in _REGISTRY:
        raise ProviderError(
            f"Unknown provider '{key}'. Available: {', '.join(sorted(_REGISTRY))}"
        )
    return _REGISTRY[key](config, **kwargs)


TProvider = TypeVar("TProvider", bound=BaseProvider)


def provider(
    kind: ProviderKind | str,
) -> Callable[[Callable[..., TProvider]], Callable[..., TProvider]]:
    """Decorator to register provider factories."""

    def decorator(factory: Callable[..., TProvider]) -> Callable[..., TProvider]:
        register_provider(kind, factory)
        return factory

    return decorator


def available_providers() -> dict[str, ProviderFactory]:
    """Return a copy of the registered provider mapping."""

    return dict(_REGISTRY)
