"""Concurrent, cached collection of pairwise verdicts."""

from __future__ import annotations

import asyncio
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace

from loguru import logger

from ..data import Unit
from ..errors import DataValidationError
from ..pairing import PairComparison, PairPlan, PlannedPair, Verdict
from .cache import CacheRecord, ResponseCache, prompt_digest
from .providers import BaseProvider, CompletionRequest
from .questions import QuestionSpec
from .ratelimit import TokenBucket
from .templates import PromptTemplate, render_prompt, system_prompt
from .verdicts import parse_verdict

Parsed = Verdict | dict[str, Verdict]
MAX_ATTEMPTS = 2


def _failed(parsed: Parsed) -> bool:
    if isinstance(parsed, dict):
        return all(verdict is Verdict.INVALID for verdict in parsed.values())
    return parsed is Verdict.INVALID


@dataclass(frozen=True, slots=True)
class AskOutcome:
    parsed: Parsed
    attempts: int
    response_ref: str
    raw: str


async def _complete(
    provider: BaseProvider,
    request: CompletionRequest,
    key: str,
    cache: ResponseCache | None,
    limiter: TokenBucket | None,
) -> str:
    if cache is not None:
        record = cache.get(key, request.attempt)
        if record is not None:
            return record.response
    if limiter is not None:
        await limiter.acquire()
    raw = await provider.complete(request)
    if cache is not None:
        await cache.put(
            CacheRecord(
                key=key,
                prompt_digest=prompt_digest(request.prompt),
                model=provider.model,
                attempt=request.attempt,
                prompt=request.prompt,
                response=raw,
            )
        )
    return raw


async def ask(
    provider: BaseProvider,
    request: CompletionRequest,
    parse: Callable[[str], Parsed],
    *,
    cache: ResponseCache | None = None,
    limiter: TokenBucket | None = None,
) -> AskOutcome:
    """Ask once, and once more with the identical prompt if the answer cannot be parsed.

    The cache is consulted before every provider call. For multi-quality questions the retry
    happens only when no quality could be parsed.
    """

    key = prompt_digest(provider.model, request.system, request.prompt)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        raw = await _complete(provider, replace(request, attempt=attempt), key, cache, limiter)
        parsed = parse(raw)
        if not _failed(parsed) or attempt == MAX_ATTEMPTS:
            return AskOutcome(
                parsed=parsed, attempts=attempt, response_ref=f"{key}:{attempt}", raw=raw
            )
    raise AssertionError("unreachable")


class ComparisonClient:
    """Runs every (pair, question) request of a plan with bounded concurrency."""

    def __init__(
        self,
        provider: BaseProvider,
        template: PromptTemplate,
        questions: Sequence[QuestionSpec],
        units: Mapping[str, Unit],
        *,
        cache: ResponseCache | None = None,
        max_in_flight: int | None = None,
        limiter: TokenBucket | None = None,
    ) -> None:
        self.provider = provider
        self.template = template
        self.questions = {question.id: question for question in questions}
        self.units = units
        self.cache = cache
        self.max_in_flight = max_in_flight or provider.config.max_in_flight
        rpm = provider.config.requests_per_minute
        self.limiter = limiter or (TokenBucket(rpm) if rpm else None)
        self._system = system_prompt()

    def _unit(self, unit_id: str) -> Unit:
        try:
            return self.units[unit_id]
        except KeyError as exc:
            raise DataValidationError(f"planned unit '{unit_id}' is not in the experiment") from exc

    def request_for(self, pair: PlannedPair, question: QuestionSpec) -> CompletionRequest:
        first, second = pair.shown
        prompt = render_prompt(self.template, question, self._unit(first), self._unit(second))
        return CompletionRequest(
            prompt=prompt, system=self._system, first=first, second=second, question=question
        )

    def _parser(self, question: QuestionSpec) -> Callable[[str], Parsed]:
        words = self.template.answer_words

        def parse(raw: str) -> Parsed:
            return parse_verdict(raw, question.mode, qualities=question.qualities, words=words)

        return parse

    async def compare(self, pair: PlannedPair, question: QuestionSpec) -> list[PairComparison]:
        outcome = await ask(
            self.provider,
            self.request_for(pair, question),
            self._parser(question),
            cache=self.cache,
            limiter=self.limiter,
        )
        verdicts = (
            {f"{question.id}.{quality}": verdict for quality, verdict in outcome.parsed.items()}
            if isinstance(outcome.parsed, dict)
            else {question.id: outcome.parsed}
        )
        return [
            PairComparison(
                unit_a=pair.unit_a,
                unit_b=pair.unit_b,
                question=score_key,
                verdict=verdict,
                attempts=outcome.attempts,
                presentation=pair.presentation,
                raw=outcome.response_ref,
            )
            for score_key, verdict in verdicts.items()
        ]

    async def run(self, plan: PairPlan) -> list[PairComparison]:
        """All comparisons of the plan, returned in plan order whatever the completion order."""

        unknown = [qid for qid in plan.questions if qid not in self.questions]
        if unknown:
            raise DataValidationError(
                f"plan references unknown question(s): {', '.join(unknown)}"
            )
        semaphore = asyncio.Semaphore(self.max_in_flight)
        requests = list(plan.requests())
        results: list[list[PairComparison]] = [[] for _ in requests]

        async def worker(slot: int, pair: PlannedPair, question: QuestionSpec) -> None:
            async with semaphore:
                results[slot] = await self.compare(pair, question)

        await asyncio.gather(
            *(
                worker(slot, pair, self.questions[qid])
                for slot, (_, pair, qid) in enumerate(requests)
            )
        )
        comparisons = [comparison for batch in results for comparison in batch]
        invalid = sum(comparison.verdict is Verdict.INVALID for comparison in comparisons)
        retried = sum(batch[0].attempts > 1 for batch in results if batch)
        logger.info(
            f"Collected {len(comparisons)} verdicts for {len(requests)} requests "
            f"({retried} retried, {invalid} invalid"
            + (f", {self.cache.hits} cache hits)" if self.cache is not None else ")")
        )
        return comparisons
