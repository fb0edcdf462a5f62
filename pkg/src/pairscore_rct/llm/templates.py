"""Rendering units into pairwise comparison prompts."""

from __future__ import annotations

import math
from functools import lru_cache
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator
from textprompts import load_prompt

from ..data import CovariateValue, Unit
from ..errors import DataValidationError
from .questions import QuestionSpec

PROMPTS_DIR = Path(__file__).resolve().parent / "prompts"


@lru_cache(maxsize=8)
def prompt_text(name: str) -> str:
    """Body of a bundled prompt file, without its front matter."""

    prompt = load_prompt(PROMPTS_DIR / f"{name}.txt", meta="strict")
    return str(prompt.prompt)


class SentenceTemplate(BaseModel):
    """How one covariate is written out, e.g. ``"They are {value} years old."``.

    A missing value renders `missing` when given, otherwise "Their <label> is unknown."
    """

    text: str
    label: str | None = None
    missing: str | None = None

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="before")
    @classmethod
    def from_string(cls, value: Any) -> Any:
        if isinstance(value, str):
            return {"text": value}
        return value

    @model_validator(mode="after")
    def has_value_slot(self) -> SentenceTemplate:
        if "{value}" not in self.text:
            msg = f"sentence template {self.text!r} lacks a {{value}} slot"
            raise ValueError(msg)
        return self

    def render(self, name: str, value: CovariateValue, missing_phrase: str) -> str:
        if value is None:
            if self.missing is not None:
                return self.missing
            label = self.label or name.replace("_", " ")
            return f"Their {label} {missing_phrase}."
        return self.text.format(value=format_value(value))


def format_value(value: CovariateValue) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isfinite(value) and value.is_integer():
            return str(int(value))
        return f"{value:g}"
    return str(value)


class PromptTemplate(BaseModel):
    """Schema-driven prompt layout.

    Every covariate present on a unit needs a sentence template unless it is listed in
    `omit`; text fields are appended verbatim under their label. `synonyms` are extra words
    accepted in place of `unit_label` when parsing answers ("paper" for "observation").
    """

    unit_label: str = "Observation"
    noun: str | None = None
    synonyms: list[str] = Field(default_factory=list)
    preamble: str | None = None
    sentences: dict[str, SentenceTemplate] = Field(default_factory=dict)
    text_labels: dict[str, str] = Field(default_factory=dict)
    missing_phrase: str = "is unknown"
    omit: list[str] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def answer_words(self) -> tuple[str, ...]:
        return (self.unit_label.lower(), *(word.lower() for word in self.synonyms))

    def describe(self, unit: Unit) -> list[str]:
        """Sentences describing one unit; rendering is total over present covariates."""

        lacking = [
            name
            for name in unit.covariates
            if name not in self.sentences and name not in self.omit
        ]
        if lacking:
            raise DataValidationError(
                f"no sentence template for covariate(s): {', '.join(sorted(lacking))}"
            )
        lines = [
            self.sentences[name].render(name, value, self.missing_phrase)
            for name, value in unit.covariates.items()
            if name not in self.omit
        ]
        for name, text in unit.text_fields.items():
            if name in self.omit:
                continue
            label = self.text_labels.get(name, name.replace("_", " ").capitalize())
            lines.append(f"{label}: {text if text else 'unknown'}")
        return lines


def _observations(template: PromptTemplate, first: Unit, second: Unit) -> str:
    blocks = []
    for position, unit in enumerate((first, second), start=1):
        body = "\n".join(template.describe(unit))
        blocks.append(f"{template.unit_label} {position}:\n{body}")
    return "\n\n".join(blocks)


def render_prompt(
    template: PromptTemplate, question: QuestionSpec, unit_a: Unit, unit_b: Unit
) -> str:
    """Prompt text with `unit_a` shown first; callers pass units in presentation order."""

    noun = (template.noun or template.unit_label).lower()
    body = prompt_text("multi_quality" if question.is_multi else "single_quality")
    text = body.format(
        noun=noun,
        label=template.unit_label,
        target=question.target_description.strip().rstrip("?."),
        observations=_observations(template, unit_a, unit_b),
        quality_list="\n".join(
            f"{index}. {quality}" for index, quality in enumerate(question.qualities, start=1)
        ),
    )
    if template.preamble:
        text = f"{template.preamble.strip()}\n\n{text}"
    return text.strip() + "\n"


def system_prompt() -> str:
    return prompt_text("system").strip()
