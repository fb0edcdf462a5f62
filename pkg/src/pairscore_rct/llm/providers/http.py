"""OpenAI-compatible chat-completions provider."""

from __future__ import annotations

import os
from typing import Any, cast

import httpx
from loguru import logger
from tenacity import AsyncRetrying, retry_if_exception, stop_after_attempt, wait_exponential

from ...errors import LiveCallRefused, ProviderError
from .base import BaseProvider, CompletionRequest, ProviderConfig, ProviderKind, provider


def _is_transient(exc: BaseException) -> bool:
    if isinstance(exc, httpx.HTTPStatusError):
        status = exc.response.status_code
        return status == 429 or status >= 500
    return isinstance(exc, httpx.RequestError)


class HttpChatProvider(BaseProvider):
    """POSTs the rendered prompt as a system+user chat and returns the first choice's text.

    Rate-limit (429) and server (5xx) responses and network errors are retried with
    exponential backoff up to `max_transport_attempts`; anything left is a `ProviderError`.
    """

    kind = ProviderKind.HTTP_CHAT

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: httpx.AsyncBaseTransport | None = None,
        api_key: str | None = None,
    ) -> None:
        if not config.live:
            raise LiveCallRefused(
                "the http_chat provider makes paid network calls; rerun with --live "
                "(or set provider.live = true) to allow them, or use --provider mock"
            )
        super().__init__(config)
        key = api_key or os.environ.get(config.api_key_env)
        if not key:
            raise ProviderError(
                f"environment variable {config.api_key_env} is not set; "
                "export it or add it to your .env file"
            )
        self._headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        self._client = httpx.AsyncClient(
            timeout=httpx.Timeout(config.timeout_seconds, connect=10.0), transport=transport
        )

    def _body(self, request: CompletionRequest) -> dict[str, Any]:
        return {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.prompt},
            ],
            "temperature": self.config.temperature,
        }

    async def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        retrying = AsyncRetrying(
            stop=stop_after_attempt(self.config.max_transport_attempts),
            wait=wait_exponential(multiplier=self.config.backoff_seconds, max=60),
            retry=retry_if_exception(_is_transient),
            before_sleep=lambda state: logger.warning(
                f"Transport failure on attempt {state.attempt_number}, retrying: "
                f"{state.outcome.exception() if state.outcome else 'unknown'}"
            ),
            reraise=True,
        )
        async for attempt in retrying:
            with attempt:
                response = await self._client.post(
                    self.config.endpoint, headers=self._headers, json=body
                )
                response.raise_for_status()
                return cast(dict[str, Any], response.json())
        raise ProviderError("no transport attempt was made")

    async def complete(self, request: CompletionRequest) -> str:
        try:
            payload = await self._post(self._body(request))
        except httpx.HTTPStatusError as exc:
            raise ProviderError(
                f"chat endpoint returned status {exc.response.status_code}: "
                f"{exc.response.text[:200]}"
            ) from exc
        except httpx.RequestError as exc:
            raise ProviderError(f"failed to reach chat endpoint: {exc}") from exc

        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError("chat response has no choices[0].message.content") from exc
        return str(content or "")

    async def aclose(self) -> None:
        await self._client.aclose()


@provider(ProviderKind.HTTP_CHAT)
def _create_http(
    config: ProviderConfig,
    *,
    transport: httpx.AsyncBaseTransport | None = None,
    api_key: str | None = None,
    **_: object,
) -> HttpChatProvider:
    return HttpChatProvider(config, transport=transport, api_key=api_key)
