"""Tests for prompt rendering and verdict parsing."""

from __future__ import annotations

import pytest

from pairscore_rct.data import Unit
from pairscore_rct.errors import DataValidationError
from pairscore_rct.llm import (
    PromptTemplate,
    QuestionMode,
    QuestionSpec,
    SentenceTemplate,
    parse_verdict,
    quality_key,
    render_prompt,
    system_prompt,
)
from pairscore_rct.pairing import Verdict

QUALITIES = [
    "topic novelty",
    "topic popularity",
    "title catchiness",
    "generalizability",
    "writing quality",
    "impact of results",
    "subfield popularity",
    "technicality",
    "meaningful contributions",
    "applicability",
]


@pytest.fixture()
def student_template() -> PromptTemplate:
    return PromptTemplate(
        unit_label="Student",
        sentences={
            "age": SentenceTemplate(text="They are {value} years old."),
            "pretest": SentenceTemplate(
                text="Their pretest score is {value}.", label="pretest score"
            ),
            "female": "Is female: {value}.",
        },
    )


@pytest.fixture()
def algebra() -> QuestionSpec:
    return QuestionSpec(
        id="algebra",
        target_description="more likely to score higher on an algebra proficiency exam",
    )


def test_covariates_are_written_out(student_template, algebra) -> None:
    first = Unit(id="a", covariates={"age": 34, "pretest": 71.5, "female": True})
    second = Unit(id="b", covariates={"age": 29.0, "pretest": None, "female": False})

    prompt = render_prompt(student_template, algebra, first, second)

    assert "They are 34 years old." in prompt
    assert "They are 29 years old." in prompt
    assert "Their pretest score is 71.5." in prompt
    assert "Their pretest score is unknown." in prompt
    assert "Is female: yes." in prompt
    assert prompt.index("Student 1:") < prompt.index("34 years") < prompt.index("Student 2:")
    assert "algebra proficiency exam?" in prompt
    assert '"Student 1" or "Student 2"' in prompt


def test_presentation_order_follows_arguments(student_template, algebra) -> None:
    first = Unit(id="a", covariates={"age": 34, "pretest": 1.0, "female": True})
    second = Unit(id="b", covariates={"age": 50, "pretest": 1.0, "female": True})
    forward = render_prompt(student_template, algebra, first, second)
    backward = render_prompt(student_template, algebra, second, first)
    assert forward != backward
    assert forward.index("34 years") < forward.index("50 years")
    assert backward.index("50 years") < backward.index("34 years")
    assert forward == render_prompt(student_template, algebra, first, second)


def test_missing_sentence_uses_custom_phrase(algebra) -> None:
    template = PromptTemplate(
        sentences={"charge": SentenceTemplate(text="Charged with {value}.", missing="No charge.")},
        missing_phrase="was not recorded",
    )
    prompt = render_prompt(
        template, algebra, Unit(id="a", covariates={"charge": None}), Unit(id="b")
    )
    assert "No charge." in prompt


def test_text_fields_and_omitted_covariates(algebra) -> None:
    template = PromptTemplate(
        unit_label="Paper",
        omit=["internal"],
        text_labels={"abstract": "Abstract"},
        preamble="You are reviewing journal submissions.",
    )
    unit = Unit(id="a", covariates={"internal": 3}, text_fields={"abstract": "We study X."})
    prompt = render_prompt(template, algebra, unit, Unit(id="b", text_fields={"abstract": None}))
    assert prompt.startswith("You are reviewing journal submissions.")
    assert "Abstract: We study X." in prompt
    assert "Abstract: unknown" in prompt
    assert "internal" not in prompt


def test_covariate_without_template_is_an_error(student_template, algebra) -> None:
    unit = Unit(id="a", covariates={"income": 10})
    with pytest.raises(DataValidationError):
        render_prompt(student_template, algebra, unit, unit)


def test_sentence_needs_value_slot() -> None:
    with pytest.raises(ValueError):
        SentenceTemplate(text="They are old.")


def test_multi_quality_prompt_lists_every_quality() -> None:
    question = QuestionSpec(id="paper", mode=QuestionMode.MULTI_QUALITY, qualities=QUALITIES)
    template = PromptTemplate(unit_label="Paper", text_labels={"abstract": "Abstract"})
    prompt = render_prompt(
        template,
        question,
        Unit(id="a", text_fields={"abstract": "First abstract."}),
        Unit(id="b", text_fields={"abstract": "Second abstract."}),
    )
    for index, quality in enumerate(QUALITIES, start=1):
        assert f"{index}. {quality}" in prompt
    assert "First abstract." in prompt and "Second abstract." in prompt
    assert question.score_keys()[2] == "paper.title_catchiness"


def test_question_validation() -> None:
    with pytest.raises(ValueError):
        QuestionSpec(id="q")
    with pytest.raises(ValueError):
        QuestionSpec(id="q", mode=QuestionMode.MULTI_QUALITY, qualities=["novelty"])
    with pytest.raises(ValueError):
        QuestionSpec(id="q", mode=QuestionMode.MULTI_QUALITY, qualities=["A b", "a-b"])
    with pytest.raises(ValueError):
        QuestionSpec(id="has space", target_description="x")


def test_system_prompt_is_bundled() -> None:
    assert "pick one" in system_prompt()


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("Observation 1", Verdict.FIRST),
        ("observation 2.", Verdict.SECOND),
        ("  **OBSERVATION-2** ", Verdict.SECOND),
        ("I would say Observation 1, because of the higher score.", Verdict.FIRST),
        ("Both seem equal", Verdict.INVALID),
        ("Neither", Verdict.INVALID),
        ("Observation 1 or Observation 2", Verdict.INVALID),
        ("Observation 12", Verdict.INVALID),
        ("", Verdict.INVALID),
        (None, Verdict.INVALID),
    ],
)
def test_single_quality_verdicts(raw: str | None, expected: Verdict) -> None:
    assert parse_verdict(raw) is expected


def test_synonyms_are_accepted_when_configured() -> None:
    assert parse_verdict("Paper 2") is Verdict.INVALID
    assert parse_verdict("Paper 2", words=("observation", "paper")) is Verdict.SECOND


def test_multi_quality_verdicts_are_parsed_per_quality() -> None:
    qualities = ["novelty", "writing quality", "impact"]
    raw = "1: Paper 1\nWriting quality: paper 2\n3: not sure"
    verdicts = parse_verdict(
        raw, QuestionMode.MULTI_QUALITY, qualities=qualities, words=("paper",)
    )
    assert verdicts == {
        "novelty": Verdict.FIRST,
        "writing_quality": Verdict.SECOND,
        "impact": Verdict.INVALID,
    }


def test_multi_quality_conflicting_lines_are_invalid() -> None:
    raw = "1. Observation 1\n1. Observation 2\n2) Observation 2"
    verdicts = parse_verdict(raw, QuestionMode.MULTI_QUALITY, qualities=["a", "b"])
    assert verdicts == {"a": Verdict.INVALID, "b": Verdict.SECOND}


def test_multi_quality_lines_may_repeat_the_quality_label() -> None:
    qualities = ["topic novelty", "writing quality", "impact of results"]
    raw = "1. topic novelty: Observation 1\n2) Writing quality: observation 2\n3. impact: 1"
    verdicts = parse_verdict(raw, QuestionMode.MULTI_QUALITY, qualities=qualities)
    assert verdicts == {
        "topic_novelty": Verdict.FIRST,
        "writing_quality": Verdict.SECOND,
        "impact_of_results": Verdict.INVALID,
    }


def test_quality_key() -> None:
    assert quality_key("Title catchiness") == "title_catchiness"
    assert quality_key(" Impact of results! ") == "impact_of_results"
