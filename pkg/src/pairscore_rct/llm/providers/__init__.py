"""Verdict providers: a live chat-completions client and a seeded mock."""

from .base import (
    BaseProvider,
    CompletionRequest,
    MockSettings,
    ProviderConfig,
    ProviderKind,
    available_providers,
    create_provider,
    provider,
    register_provider,
)
from .http import HttpChatProvider
from .mock import REFUSAL_TEXT, MockProvider, mock_provider, request_seed

__all__ = [
    "REFUSAL_TEXT",
    "BaseProvider",
    "CompletionRequest",
    "HttpChatProvider",
    "MockProvider",
    "MockSettings",
    "ProviderConfig",
    "ProviderKind",
    "available_providers",
    "create_provider",
    "mock_provider",
    "provider",
    "register_provider",
    "request_seed",
]
