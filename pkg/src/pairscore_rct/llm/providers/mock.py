"""Seeded mock provider driven by latent unit scores."""

from __future__ import annotations

import hashlib
from collections.abc import Mapping

import numpy as np
from scipy.special import expit

from ...errors import DataValidationError
from ..questions import quality_key
from .base import (
    BaseProvider,
    CompletionRequest,
    MockSettings,
    ProviderConfig,
    ProviderKind,
    provider,
)

REFUSAL_TEXT = "Neither. I cannot determine which one fits better."


def request_seed(seed: int, *parts: object) -> int:
    """64-bit seed derived from the request identity, independent of arrival order."""

    digest = hashlib.blake2b("|".join(map(str, (seed, *parts))).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


class MockProvider(BaseProvider):
    """Chooses the first-shown unit with probability logistic((latent_1 - latent_2) / noise).

    With `noise_scale` 0 the higher latent always wins (ties by a seeded coin). On the first
    attempt a request is refused with probability `refusal_rate`.
    """

    kind = ProviderKind.MOCK

    def __init__(
        self,
        config: ProviderConfig,
        *,
        latent: Mapping[str, float] | None = None,
        answer_word: str = "Observation",
    ) -> None:
        super().__init__(config)
        settings = config.mock
        self.latent = dict(settings.latent if latent is None else latent)
        self.noise_scale = settings.noise_scale
        self.refusal_rate = settings.refusal_rate
        self.seed = settings.seed
        self.answer_word = answer_word
        self.calls = 0
        self._model = self._model_name()

    def _model_name(self) -> str:
        """The seed plus a digest of every setting that changes the answers."""

        latent = ",".join(f"{key}={value!r}" for key, value in sorted(self.latent.items()))
        settings = f"{self.noise_scale!r}|{self.refusal_rate!r}|{self.answer_word}|{latent}"
        digest = hashlib.blake2b(settings.encode(), digest_size=4).hexdigest()
        return f"mock-{self.seed}-{digest}"

    @property
    def model(self) -> str:
        return self._model

    def _latent(self, unit_id: str) -> float:
        try:
            return float(self.latent[unit_id])
        except KeyError as exc:
            raise DataValidationError(f"mock provider has no latent score for '{unit_id}'") from exc

    def _choose(self, rng: np.random.Generator, first: float, second: float) -> int:
        if self.noise_scale == 0.0:
            if first == second:
                return 1 if rng.random() < 0.5 else 2
            return 1 if first > second else 2
        p_first = float(expit((first - second) / self.noise_scale))
        return 1 if rng.random() < p_first else 2

    async def complete(self, request: CompletionRequest) -> str:
        self.calls += 1
        first = self._latent(request.first)
        second = self._latent(request.second)
        question = request.question
        base = (request.first, request.second, question.id, request.attempt)

        gate = np.random.default_rng(request_seed(self.seed, *base, "refusal"))
        if request.attempt == 1 and gate.random() < self.refusal_rate:
            return REFUSAL_TEXT

        if not question.is_multi:
            rng = np.random.default_rng(request_seed(self.seed, *base))
            return f"{self.answer_word} {self._choose(rng, first, second)}"

        lines = []
        for index, quality in enumerate(question.qualities, start=1):
            rng = np.random.default_rng(request_seed(self.seed, *base, quality_key(quality)))
            lines.append(f"{index}: {self.answer_word} {self._choose(rng, first, second)}")
        return "\n".join(lines)


@provider(ProviderKind.MOCK)
def _create_mock(
    config: ProviderConfig,
    *,
    latent: Mapping[str, float] | None = None,
    answer_word: str = "Observation",
    **_: object,
) -> MockProvider:
    return MockProvider(config, latent=latent, answer_word=answer_word)


def mock_provider(
    latent: Mapping[str, float],
    noise_scale: float = 1.0,
    refusal_rate: float = 0.0,
    seed: int = 0,
    *,
    answer_word: str = "Observation",
) -> MockProvider:
    """Standalone mock provider over the given latent scores."""

    settings = MockSettings(noise_scale=noise_scale, refusal_rate=refusal_rate, seed=seed)
    config = ProviderConfig(kind=ProviderKind.MOCK, mock=settings)
    return MockProvider(config, latent=latent, answer_word=answer_word)
