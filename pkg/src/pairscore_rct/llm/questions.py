"""Comparison questions put to the language model."""

from __future__ import annotations

import re
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class QuestionMode(str, Enum):
    SINGLE_QUALITY = "single_quality"
    MULTI_QUALITY = "multi_quality"


def quality_key(quality: str) -> str:
    """Column-safe form of a quality name ("Title catchiness" -> "title_catchiness")."""

    return re.sub(r"[^a-z0-9]+", "_", quality.lower()).strip("_")


class QuestionSpec(BaseModel):
    """A pairwise question.

    Single-quality questions ask which unit is `target_description` (for example "more likely
    to score higher on an algebra proficiency exam"). Multi-quality questions ask about every
    entry of `qualities` in one prompt and yield one score column per quality.
    """

    id: str = Field(pattern=r"^[A-Za-z0-9_-]+$")
    target_description: str = ""
    mode: QuestionMode = QuestionMode.SINGLE_QUALITY
    qualities: list[str] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def check_mode(self) -> QuestionSpec:
        if self.mode is QuestionMode.SINGLE_QUALITY:
            if not self.target_description.strip():
                msg = f"question '{self.id}' needs a target_description"
                raise ValueError(msg)
            if self.qualities:
                msg = f"question '{self.id}' lists qualities but is single_quality"
                raise ValueError(msg)
            return self
        keys = [quality_key(quality) for quality in self.qualities]
        if len(set(keys)) < 2 or len(set(keys)) != len(keys) or not all(keys):
            msg = f"question '{self.id}' needs at least 2 distinct qualities"
            raise ValueError(msg)
        return self

    @property
    def is_multi(self) -> bool:
        return self.mode is QuestionMode.MULTI_QUALITY

    def score_keys(self) -> tuple[str, ...]:
        """Names of the pair-score columns this question produces."""

        if not self.is_multi:
            return (self.id,)
        return tuple(f"{self.id}.{quality_key(quality)}" for quality in self.qualities)
