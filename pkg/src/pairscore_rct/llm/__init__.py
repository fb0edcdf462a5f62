"""Prompt rendering, verdict providers and the comparison client."""

from .cache import CacheRecord, ResponseCache, prompt_digest
from .client import AskOutcome, ComparisonClient, ask
from .providers import (
    BaseProvider,
    CompletionRequest,
    HttpChatProvider,
    MockProvider,
    MockSettings,
    ProviderConfig,
    ProviderKind,
    available_providers,
    create_provider,
    mock_provider,
)
from .questions import QuestionMode, QuestionSpec, quality_key
from .ratelimit import TokenBucket
from .templates import PromptTemplate, SentenceTemplate, render_prompt, system_prompt
from .verdicts import parse_verdict

__all__ = [
    "AskOutcome",
    "BaseProvider",
    "CacheRecord",
    "ComparisonClient",
    "CompletionRequest",
    "HttpChatProvider",
    "MockProvider",
    "MockSettings",
    "PromptTemplate",
    "ProviderConfig",
    "ProviderKind",
    "QuestionMode",
    "QuestionSpec",
    "ResponseCache",
    "SentenceTemplate",
    "TokenBucket",
    "ask",
    "available_providers",
    "create_provider",
    "mock_provider",
    "parse_verdict",
    "prompt_digest",
    "quality_key",
    "render_prompt",
    "system_prompt",
]
