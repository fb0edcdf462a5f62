"""Tests for stratification, pair planning and score aggregation."""

from __future__ import annotations

from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from pairscore_rct.data import encode_covariates
from pairscore_rct.errors import DataValidationError
from pairscore_rct.pairing import (
    GroupSpec,
    PairComparison,
    PairPlan,
    PairScoreSet,
    Presentation,
    StratifyConfig,
    StratumAssignment,
    Verdict,
    aggregate_scores,
    order_effect_summary,
    plan_pairs,
    read_comparisons_csv,
    single_stratum,
    stratify,
    stratify_by_label,
    write_comparisons_csv,
)


def _won(winner: str, loser: str, question: str = "q") -> PairComparison:
    return PairComparison(unit_a=winner, unit_b=loser, question=question, verdict=Verdict.FIRST)


def _invalid(a: str, b: str, question: str = "q") -> PairComparison:
    return PairComparison(unit_a=a, unit_b=b, question=question, verdict=Verdict.INVALID)


def test_sorted_split_into_groups_of_ten() -> None:
    values = np.arange(20, 0, -1, dtype=float)
    strata = stratify(values, GroupSpec(group_size=10))
    members = strata.members()
    assert len(members) == 2
    low = {float(values[i]) for i in members["g1"]}
    assert low == {float(v) for v in range(1, 11)}


def test_thousand_and_three_units_in_ten_groups() -> None:
    rng = np.random.default_rng(0)
    strata = stratify(rng.standard_normal(1003), GroupSpec(n_groups=10))
    sizes = strata.sizes()
    assert len(sizes) == 10
    assert set(sizes.values()) <= {100, 101}
    assert sum(sizes.values()) == 1003


def test_quantile_strata_are_contiguous_in_value() -> None:
    rng = np.random.default_rng(1)
    values = rng.standard_normal(57)
    strata = stratify(values, GroupSpec(n_groups=4))
    ranges = sorted(
        (values[indices].min(), values[indices].max()) for indices in strata.members().values()
    )
    for (_, upper), (lower, _) in zip(ranges, ranges[1:], strict=False):
        assert upper < lower


def test_ties_are_broken_by_unit_index() -> None:
    strata = stratify([1.0, 1.0, 1.0, 1.0], GroupSpec(n_groups=2))
    assert strata.stratum_of == ("g1", "g1", "g2", "g2")


def test_infeasible_group_spec() -> None:
    with pytest.raises(DataValidationError):
        stratify([1.0, 2.0, 3.0], GroupSpec(group_size=5))
    with pytest.raises(DataValidationError):
        stratify([1.0, np.nan], GroupSpec(n_groups=1))
    with pytest.raises(ValueError):
        GroupSpec(n_groups=2, group_size=3)
    with pytest.raises(ValueError):
        StratifyConfig(basis="categorical_column")


def test_categorical_strata_follow_levels() -> None:
    journals = ["Science", "Genetics", "Science", None, "Genetics"]
    strata = stratify_by_label(journals, unit_ids=["a", "b", "c", "d", "e"])
    assert strata.labels() == ("Science", "Genetics", "missing")
    assert strata.stratum_for("c") == "Science"
    with pytest.raises(DataValidationError):
        strata.stratum_for("zz")


def test_strata_csv_round_trip(tmp_path: Path) -> None:
    strata = stratify_by_label(["x", "y", "x"], unit_ids=["u1", "u2", "u3"])
    loaded = StratumAssignment.read_csv(strata.write_csv(tmp_path / "strata.csv"))
    assert loaded.stratum_of == strata.stratum_of
    assert loaded.unit_ids == strata.unit_ids


def test_stratum_of_ten_gives_forty_five_pairs() -> None:
    plan = plan_pairs(single_stratum([f"u{i}" for i in range(10)]), ["q"], seed=3)
    assert len(plan) == 45
    assert len(plan.unordered_pairs()) == 45


def test_pairs_never_cross_strata() -> None:
    strata = stratify_by_label(["s", "s", "s", "t", "t"], unit_ids=["a", "b", "c", "d", "e"])
    plan = plan_pairs(strata, ["q"], seed=9)
    assert len(plan) == 4
    for pair in plan.pairs:
        assert strata.stratum_for(pair.unit_a) == strata.stratum_for(pair.unit_b) == pair.stratum


def test_plan_is_deterministic_in_seed() -> None:
    strata = single_stratum([f"u{i}" for i in range(12)])
    first = plan_pairs(strata, ["q1", "q2"], seed=42)
    second = plan_pairs(strata, ["q1", "q2"], seed=42)
    other = plan_pairs(strata, ["q1", "q2"], seed=43)
    assert first.pairs == second.pairs
    assert first.pairs != other.pairs
    assert len(list(first.requests())) == 2 * 66


def test_presentation_coin_is_roughly_fair() -> None:
    plan = plan_pairs(single_stratum([f"u{i}" for i in range(60)]), ["q"], seed=5)
    share = np.mean([pair.presentation is Presentation.A_FIRST for pair in plan.pairs])
    assert 0.45 < share < 0.55


def test_singleton_stratum_is_skipped() -> None:
    strata = stratify_by_label(["s", "s", "t"], unit_ids=["a", "b", "c"])
    plan = plan_pairs(strata, ["q"], seed=0)
    assert plan.unordered_pairs() == {frozenset(("a", "b"))}


def test_pair_cap_samples_without_replacement() -> None:
    plan = plan_pairs(
        single_stratum([f"u{i}" for i in range(10)]), ["q"], seed=1, max_pairs_per_stratum=7
    )
    assert len(plan) == 7
    assert len(plan.unordered_pairs()) == 7


def test_ordered_mode_plans_both_presentations() -> None:
    plan = plan_pairs(single_stratum(["a", "b", "c"]), ["q"], seed=2, ordered=True)
    assert len(plan) == 6
    assert {pair.shown for pair in plan.pairs} == {
        (x, y) for x in "abc" for y in "abc" if x != y
    }


def test_plan_rejects_bad_inputs() -> None:
    strata = single_stratum(["a", "b"])
    with pytest.raises(DataValidationError):
        plan_pairs(strata, [], seed=0)
    with pytest.raises(DataValidationError):
        plan_pairs(strata, ["q", "q"], seed=0)
    with pytest.raises(DataValidationError):
        plan_pairs(strata, ["q"], seed=-1)


def test_plan_csv_round_trip(tmp_path: Path) -> None:
    plan = plan_pairs(single_stratum(["a", "b", "c", "d"]), ["q"], seed=4)
    loaded = PairPlan.read_csv(plan.write_csv(tmp_path / "pairs.csv"), questions=["q"], seed=4)
    assert loaded.pairs == plan.pairs


def test_full_round_robin_of_three() -> None:
    strata = single_stratum(["a", "b", "c"])
    scores = aggregate_scores([_won("a", "b"), _won("a", "c"), _won("b", "c")], strata)
    np.testing.assert_allclose(scores.scores("q"), [1.0, 0.5, 0.0])


def test_invalid_pair_is_dropped() -> None:
    strata = single_stratum(["a", "b", "c"])
    scores = aggregate_scores([_won("a", "b"), _invalid("a", "c"), _won("b", "c")], strata)
    np.testing.assert_allclose(scores.scores("q"), [1.0, 0.5, 0.0])
    np.testing.assert_array_equal(scores.performed["q"], [1, 2, 1])


def test_round_robin_scores_sum_to_half_the_stratum() -> None:
    rng = np.random.default_rng(7)
    ids = [f"u{i}" for i in range(10)]
    comparisons = [
        _won(a, b) if rng.random() < 0.5 else _won(b, a) for a, b in combinations(ids, 2)
    ]
    scores = aggregate_scores(comparisons, single_stratum(ids))
    assert scores.scores("q").sum() == pytest.approx(5.0)
    assert scores.wins["q"].sum() == 45
    np.testing.assert_array_equal(scores.performed["q"], np.full(10, 9))


def test_scores_do_not_depend_on_presentation() -> None:
    strata = single_stratum(["a", "b"])
    shown_first = PairComparison(unit_a="a", unit_b="b", question="q", verdict=Verdict.FIRST)
    shown_second = PairComparison(
        unit_a="a",
        unit_b="b",
        question="q",
        verdict=Verdict.SECOND,
        presentation=Presentation.B_FIRST,
    )
    for comparison in (shown_first, shown_second):
        assert comparison.winner == "a"
        assert comparison.loser == "b"
        np.testing.assert_allclose(aggregate_scores([comparison], strata).scores("q"), [1.0, 0.0])


def test_arrival_order_does_not_matter() -> None:
    ids = ["a", "b", "c", "d"]
    comparisons = [_won(a, b) for a, b in combinations(ids, 2)]
    forward = aggregate_scores(comparisons, single_stratum(ids))
    backward = aggregate_scores(list(reversed(comparisons)), single_stratum(ids))
    np.testing.assert_array_equal(forward.scores("q"), backward.scores("q"))


def test_unscored_units_are_missing() -> None:
    strata = single_stratum(["a", "b", "c"])
    scores = aggregate_scores([_won("a", "b"), _invalid("a", "c")], strata)
    assert np.isnan(scores.scores("q")[2])
    assert scores.performed["q"][2] == 0


def test_duplicate_comparison_is_an_error() -> None:
    strata = single_stratum(["a", "b"])
    with pytest.raises(DataValidationError):
        aggregate_scores([_won("a", "b"), _won("b", "a")], strata)


def test_comparisons_must_match_plan_and_strata() -> None:
    strata = stratify_by_label(["s", "s", "t", "t"], unit_ids=["a", "b", "c", "d"])
    plan = plan_pairs(strata, ["q"], seed=0)
    with pytest.raises(DataValidationError):
        aggregate_scores([_won("a", "c")], strata)
    with pytest.raises(DataValidationError):
        aggregate_scores([_won("a", "zz")], strata)
    with pytest.raises(DataValidationError):
        aggregate_scores([_won("a", "b", question="other")], strata, plan=plan)


def test_ordered_plan_accepts_both_presentations() -> None:
    plan = plan_pairs(single_stratum(["a", "b"]), ["q"], seed=0, ordered=True)
    comparisons = [
        PairComparison(
            unit_a=pair.unit_a,
            unit_b=pair.unit_b,
            question="q",
            verdict=Verdict.FIRST,
            presentation=pair.presentation,
        )
        for pair in plan.pairs
    ]
    scores = aggregate_scores(comparisons, single_stratum(["a", "b"]), plan=plan)
    np.testing.assert_allclose(scores.scores("q"), [0.5, 0.5])

    audit = order_effect_summary(comparisons)
    assert audit.loc[0, "first_share"] == 1.0
    assert audit.loc[0, "consistent_share"] == 0.0


def test_scores_feed_the_encoder_with_missing_indicator(four_units) -> None:
    strata = single_stratum(four_units.ids)
    scores = aggregate_scores([_won("0", "1"), _won("1", "2")], strata)
    encoded = encode_covariates(four_units, scores.as_extras())
    assert encoded.column_names == ("q", "q_missing")
    np.testing.assert_array_equal(encoded.column("q_missing"), [0.0, 0.0, 0.0, 1.0])


def test_score_and_comparison_csv(tmp_path: Path) -> None:
    strata = single_stratum(["a", "b", "c"])
    comparisons = [_won("a", "b"), _invalid("a", "c"), _won("b", "c")]
    scores = aggregate_scores(comparisons, strata)

    loaded = PairScoreSet.read_csv(scores.write_csv(tmp_path / "scores.csv"))
    np.testing.assert_allclose(loaded.scores("q"), scores.scores("q"))

    path = write_comparisons_csv(comparisons, tmp_path / "comparisons.csv")
    assert read_comparisons_csv(path) == comparisons


def test_edited_comparison_rows_are_validated(tmp_path: Path) -> None:
    path = tmp_path / "comparisons.csv"
    path.write_text("unit_a,unit_b,question,verdict\na,b,q,maybe\n", encoding="utf-8")
    with pytest.raises(DataValidationError):
        read_comparisons_csv(path)
