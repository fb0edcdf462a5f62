"""Parsing model answers into verdicts."""

from __future__ import annotations

import re
from collections.abc import Sequence

from ..pairing import Verdict
from .questions import QuestionMode, quality_key

DEFAULT_WORDS = ("observation",)


def _normalize(text: str) -> str:
    return " ".join(re.sub(r"[^a-z0-9]+", " ", text.lower()).split())


def _choice_pattern(words: Sequence[str]) -> re.Pattern[str]:
    alternatives = "|".join(re.escape(_normalize(word)) for word in words if word.strip())
    return re.compile(rf"\b(?:{alternatives})\s*([12])\b")


def _single(raw: str, words: Sequence[str]) -> Verdict:
    choices = set(_choice_pattern(words).findall(_normalize(raw)))
    if choices == {"1"}:
        return Verdict.FIRST
    if choices == {"2"}:
        return Verdict.SECOND
    return Verdict.INVALID


def _line_index(label: str, by_key: dict[str, int]) -> int | None:
    """Question index named by a line head: `2`, `writing quality` or `2. writing quality`."""

    if quality_key(label) in by_key:
        return by_key[quality_key(label)]
    number, _, rest = label.partition(" ")
    if not number.isdigit():
        return None
    if not rest:
        return int(number) - 1
    return by_key.get(quality_key(rest))


def _multi(raw: str, qualities: Sequence[str], words: Sequence[str]) -> dict[str, Verdict]:
    by_key = {quality_key(quality): index for index, quality in enumerate(qualities)}
    choice = _choice_pattern(words)
    answers: dict[int, set[str]] = {}

    for line in raw.splitlines():
        head, separator, tail = line.partition(":")
        if not separator:
            match = re.match(r"^\W*(\d+)[.)]\s*(.*)$", line)
            if not match:
                continue
            head, tail = match.groups()
        index = _line_index(_normalize(head), by_key)
        if index is None:
            continue
        if not 0 <= index < len(qualities):
            continue
        picked = set(choice.findall(_normalize(tail)))
        answers.setdefault(index, set()).update(picked or {"?"})

    verdicts: dict[str, Verdict] = {}
    for index, quality in enumerate(qualities):
        picked = answers.get(index, set())
        if picked == {"1"}:
            verdicts[quality_key(quality)] = Verdict.FIRST
        elif picked == {"2"}:
            verdicts[quality_key(quality)] = Verdict.SECOND
        else:
            verdicts[quality_key(quality)] = Verdict.INVALID
    return verdicts


def parse_verdict(
    raw: str | None,
    mode: QuestionMode = QuestionMode.SINGLE_QUALITY,
    *,
    qualities: Sequence[str] = (),
    words: Sequence[str] = DEFAULT_WORDS,
) -> Verdict | dict[str, Verdict]:
    """Case-insensitive, punctuation-tolerant answer parsing.

    A single-quality answer is First or Second only when it names exactly one of the two
    choices ("Observation 1", "observation 2."). Multi-quality answers are read line by line as
    ``<number or quality>: <choice>``; qualities without exactly one choice are Invalid.
    """

    text = raw or ""
    if mode is QuestionMode.MULTI_QUALITY:
        return _multi(text, qualities, words)
    return _single(text, words)
