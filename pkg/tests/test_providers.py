"""Tests for the mock and HTTP chat providers."""

from __future__ import annotations

import json
from itertools import combinations

import httpx
import pytest

from pairscore_rct.errors import DataValidationError, LiveCallRefused, ProviderError
from pairscore_rct.llm import (
    CompletionRequest,
    HttpChatProvider,
    MockProvider,
    ProviderConfig,
    ProviderKind,
    QuestionMode,
    QuestionSpec,
    available_providers,
    create_provider,
    mock_provider,
)
from pairscore_rct.llm.providers import REFUSAL_TEXT

QUESTION = QuestionSpec(id="q", target_description="more likely to succeed")


def _request(first: str, second: str, attempt: int = 1, question=QUESTION) -> CompletionRequest:
    return CompletionRequest(
        prompt=f"{first} vs {second}",
        system="system",
        first=first,
        second=second,
        question=question,
        attempt=attempt,
    )


def _many_pairs(count: int) -> list[tuple[str, str]]:
    ids = [f"u{i}" for i in range(150)]
    return list(combinations(ids, 2))[:count]


def test_providers_are_registered() -> None:
    assert {"mock", "http_chat"} <= set(available_providers())
    assert ProviderConfig(kind="http").kind is ProviderKind.HTTP_CHAT


@pytest.mark.asyncio
async def test_noiseless_mock_picks_higher_latent() -> None:
    provider = mock_provider({"a": 2.0, "b": 1.0}, noise_scale=0.0)
    for _ in range(5):
        assert await provider.complete(_request("a", "b")) == "Observation 1"
        assert await provider.complete(_request("b", "a")) == "Observation 2"
    assert provider.calls == 10


@pytest.mark.asyncio
async def test_mock_refusal_rate() -> None:
    pairs = _many_pairs(10_000)
    provider = mock_provider({f"u{i}": 0.0 for i in range(150)}, refusal_rate=0.1, seed=3)
    refusals = 0
    for first, second in pairs:
        refusals += await provider.complete(_request(first, second)) == REFUSAL_TEXT
    assert 900 <= refusals <= 1100

    # second attempts are never refused
    first, second = pairs[0]
    assert await provider.complete(_request(first, second, attempt=2)) != REFUSAL_TEXT


@pytest.mark.asyncio
async def test_equal_latents_split_evenly() -> None:
    pairs = _many_pairs(10_000)
    provider = mock_provider({f"u{i}": 1.0 for i in range(150)}, noise_scale=1.0, seed=8)
    first_wins = 0
    for first, second in pairs:
        first_wins += await provider.complete(_request(first, second)) == "Observation 1"
    assert 0.48 <= first_wins / len(pairs) <= 0.52


@pytest.mark.asyncio
async def test_mock_is_reproducible_and_answers_every_quality() -> None:
    latent = {"a": 0.3, "b": 0.1}
    multi = QuestionSpec(id="m", mode=QuestionMode.MULTI_QUALITY, qualities=["x", "y", "z"])
    first = mock_provider(latent, seed=5, answer_word="Paper")
    second = mock_provider(latent, seed=5, answer_word="Paper")
    answer = await first.complete(_request("a", "b", question=multi))
    assert answer == await second.complete(_request("a", "b", question=multi))
    assert [line.split(":")[0] for line in answer.splitlines()] == ["1", "2", "3"]
    assert all("Paper" in line for line in answer.splitlines())


@pytest.mark.asyncio
async def test_mock_requires_latent_scores() -> None:
    provider = mock_provider({"a": 1.0})
    with pytest.raises(DataValidationError):
        await provider.complete(_request("a", "missing"))


def test_mock_factory_takes_latent_override() -> None:
    config = ProviderConfig(mock={"latent": {"a": 1.0}, "seed": 2})
    provider = create_provider(config, latent={"b": 2.0})
    assert isinstance(provider, MockProvider)
    assert provider.latent == {"b": 2.0}
    assert provider.model.startswith("mock-2-")


def test_mock_model_name_tracks_answer_settings() -> None:
    base = mock_provider({"a": 1.0}, noise_scale=1.0, seed=2)
    assert mock_provider({"a": 1.0}, noise_scale=1.0, seed=2).model == base.model
    assert mock_provider({"a": 1.0}, noise_scale=0.0, seed=2).model != base.model
    assert mock_provider({"a": 1.0}, refusal_rate=0.1, seed=2).model != base.model
    assert mock_provider({"a": 2.0}, noise_scale=1.0, seed=2).model != base.model


def test_http_provider_requires_live_opt_in() -> None:
    with pytest.raises(LiveCallRefused):
        create_provider(ProviderConfig(kind="http"), api_key="sk-test")


def test_http_provider_requires_api_key(monkeypatch) -> None:
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    with pytest.raises(ProviderError):
        create_provider(ProviderConfig(kind="http", live=True))


def _http_provider(handler, **overrides) -> HttpChatProvider:
    config = ProviderConfig(kind="http", live=True, backoff_seconds=0.0, **overrides)
    provider = create_provider(config, transport=httpx.MockTransport(handler), api_key="sk-test")
    assert isinstance(provider, HttpChatProvider)
    return provider


def _chat_response(content: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


@pytest.mark.asyncio
async def test_http_provider_posts_chat_request() -> None:
    seen: list[httpx.Request] = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        return _chat_response("Observation 2")

    provider = _http_provider(handler, model="gpt-4o-mini")
    try:
        assert await provider.complete(_request("a", "b")) == "Observation 2"
    finally:
        await provider.aclose()

    body = json.loads(seen[0].content)
    assert body["model"] == "gpt-4o-mini"
    assert body["temperature"] == 0.0
    assert [message["role"] for message in body["messages"]] == ["system", "user"]
    assert body["messages"][1]["content"] == "a vs b"
    assert seen[0].headers["Authorization"] == "Bearer sk-test"


@pytest.mark.asyncio
async def test_http_provider_retries_rate_limits() -> None:
    statuses = iter([429, 503])

    def handler(request: httpx.Request) -> httpx.Response:
        status = next(statuses, 200)
        if status != 200:
            return httpx.Response(status, text="slow down")
        return _chat_response("Observation 1")

    provider = _http_provider(handler)
    try:
        assert await provider.complete(_request("a", "b")) == "Observation 1"
    finally:
        await provider.aclose()


@pytest.mark.asyncio
async def test_http_provider_surfaces_persistent_failures() -> None:
    calls = 0

    def handler(request: httpx.Request) -> httpx.Response:
        nonlocal calls
        calls += 1
        return httpx.Response(500, text="boom")

    provider = _http_provider(handler, max_transport_attempts=3)
    try:
        with pytest.raises(ProviderError, match="status 500"):
            await provider.complete(_request("a", "b"))
    finally:
        await provider.aclose()
    assert calls == 3


@pytest.mark.asyncio
async def test_http_provider_does_not_retry_client_errors() -> None:
    calls = 0

    def handler(request: httpx.Request) -> httpx.Response:
        nonlocal calls
        calls += 1
        return httpx.Response(401, text="bad key")

    provider = _http_provider(handler)
    try:
        with pytest.raises(ProviderError):
            await provider.complete(_request("a", "b"))
    finally:
        await provider.aclose()
    assert calls == 1


@pytest.mark.asyncio
async def test_http_provider_rejects_malformed_payload() -> None:
    provider = _http_provider(lambda request: httpx.Response(200, json={"choices": []}))
    try:
        with pytest.raises(ProviderError):
            await provider.complete(_request("a", "b"))
    finally:
        await provider.aclose()
