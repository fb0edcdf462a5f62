"""Tests for synthetic experiments and the Monte-Carlo harness."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pairscore_rct.errors import DataValidationError
from pairscore_rct.simulation import (
    DgpConfig,
    Estimator,
    McConfig,
    OutcomeModel,
    StratifySource,
    assign,
    default_suite,
    generate,
    monte_carlo,
    run_suite,
    suite_by_name,
    write_mc_csv,
)

QUICK = McConfig(estimators=[Estimator.HT, Estimator.PERFECT])


def test_constant_effect_has_exact_average() -> None:
    experiment, truth = generate(DgpConfig(n=50, effect=2.0, seed=1))
    assert truth.tau_bar == 2.0
    assert experiment.n == 50
    assert experiment.ids[0] == "u01"
    assert experiment.covariate_names == ("x1", "x2", "x3")


def test_generate_is_deterministic_in_seed() -> None:
    first, truth_a = generate(DgpConfig(seed=4, outcome_model=OutcomeModel.STEP))
    second, truth_b = generate(DgpConfig(seed=4, outcome_model=OutcomeModel.STEP))
    other, _ = generate(DgpConfig(seed=5, outcome_model=OutcomeModel.STEP))
    assert np.array_equal(first.y, second.y)
    assert np.array_equal(first.z, second.z)
    assert np.array_equal(truth_a.latent, truth_b.latent)
    assert not np.array_equal(first.y, other.y)


def test_observed_outcome_matches_assignment() -> None:
    experiment, truth = generate(DgpConfig(n=40, heterogeneity=0.5, seed=2))
    expected = np.where(experiment.z == 1, truth.y_t, truth.y_c)
    np.testing.assert_array_equal(experiment.y, expected)
    assert np.ptp(truth.tau_i) > 0.0


def test_unbalanced_assignment_counts() -> None:
    rng = np.random.default_rng(11)
    treated = np.array([assign(1000, 0.3, rng).sum() for _ in range(500)])
    assert np.mean(np.abs(treated - 300) <= 60) >= 0.99


def test_assignment_never_leaves_an_arm_empty() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = assign(2, 0.5, rng)
        assert z.sum() == 1


def test_dgp_validation() -> None:
    with pytest.raises(ValueError):
        DgpConfig(n=5)
    with pytest.raises(ValueError):
        DgpConfig(signal_share=0.8, covariate_share=0.5)
    with pytest.raises(ValueError):
        DgpConfig(p=1.0)


def test_monte_carlo_requires_enough_replications() -> None:
    with pytest.raises(DataValidationError):
        monte_carlo(DgpConfig(n=20), QUICK, replications=99)


def test_perfect_imputation_recovers_the_average_effect() -> None:
    report = monte_carlo(DgpConfig(n=40, effect=1.5, seed=3), QUICK, replications=100)
    perfect = report.tau_hats[Estimator.PERFECT.value]
    np.testing.assert_allclose(perfect, np.full(100, 1.5), atol=1e-10)
    assert report.row(Estimator.PERFECT).bias == pytest.approx(0.0, abs=1e-10)
    assert report.row("ht").replications == 100
    with pytest.raises(DataValidationError):
        report.row(Estimator.ADJUSTED_BASE)


def test_monte_carlo_is_reproducible_and_parallel_safe() -> None:
    dgp = DgpConfig(n=30, seed=6)
    config = McConfig(estimators=[Estimator.HT, Estimator.ADJUSTED_BASE])
    serial = monte_carlo(dgp, config, replications=100, master_seed=17)
    again = monte_carlo(dgp, config, replications=100, master_seed=17)
    threaded = monte_carlo(
        dgp, config.model_copy(update={"n_jobs": 4}), replications=100, master_seed=17
    )
    for key in ("ht", "adjusted_base"):
        assert np.array_equal(serial.tau_hats[key], again.tau_hats[key])
        assert np.array_equal(serial.tau_hats[key], threaded.tau_hats[key])


def test_progress_callback_and_redrawn_populations() -> None:
    seen: list[int] = []
    config = QUICK.model_copy(update={"redraw_population": True})
    report = monte_carlo(DgpConfig(n=30, heterogeneity=1.0), config, 100, progress=seen.append)
    assert sorted(seen) == list(range(100))
    assert np.ptp(report.targets) > 0.0


def test_pair_scores_enter_the_adjusted_estimator() -> None:
    config = McConfig(
        estimators=[Estimator.ADJUSTED_PAIR_SCORE],
        stratify_on=StratifySource.NONE,
        max_pairs_per_stratum=200,
    )
    report = monte_carlo(DgpConfig(n=30, seed=8), config, replications=100)
    row = report.row(Estimator.ADJUSTED_PAIR_SCORE)
    assert row.replications == 100
    assert np.isfinite(report.variances["adjusted_pair_score"]).all()


def test_suite_runs_and_writes_csv(tmp_path: Path) -> None:
    names = [dgp.name for dgp in default_suite()]
    assert names[:3] == ["linear", "step", "interaction"]
    assert len(set(names)) == len(names) == 8
    with pytest.raises(DataValidationError):
        suite_by_name("missing")

    dgps = suite_by_name("default", n=20, seed=1)[:2]
    reports = run_suite(dgps, QUICK, replications=100)
    frame = pd.read_csv(write_mc_csv(reports, tmp_path / "monte_carlo.csv"))
    assert len(frame) == 4
    assert list(frame.columns[:3]) == ["dgp", "estimator", "replications"]
    assert set(frame["dgp"]) == {"linear", "step"}


@pytest.mark.slow
def test_ht_is_unbiased_under_the_null() -> None:
    dgp = DgpConfig(name="null_effect", n=200, effect=0.0, seed=12)
    report = monte_carlo(dgp, McConfig(estimators=[Estimator.HT]), replications=2000)
    row = report.row(Estimator.HT)
    assert abs(row.mean_tau_hat) <= 4 * row.mc_se
    assert row.mean_variance >= row.empirical_variance - 3 * row.variance_mc_se
    assert row.coverage >= 0.94


@pytest.mark.slow
def test_informative_pair_scores_shrink_variance() -> None:
    dgp = DgpConfig(name="informative_latent", n=300, signal_share=0.8, covariate_share=0.1)
    config = McConfig(estimators=[Estimator.HT, Estimator.ADJUSTED_PAIR_SCORE])
    report = monte_carlo(dgp, config, replications=200)
    ht = report.row(Estimator.HT).empirical_variance
    adjusted = report.row(Estimator.ADJUSTED_PAIR_SCORE).empirical_variance
    assert ht / adjusted > 1.2


@pytest.mark.slow
@pytest.mark.parametrize("dgp", default_suite(n=200), ids=lambda dgp: dgp.name)
def test_adjustment_does_not_hurt_and_covers(dgp: DgpConfig) -> None:
    config = McConfig(estimators=[Estimator.HT, Estimator.ADJUSTED_BASE])
    report = monte_carlo(dgp, config, replications=2000)
    ht = report.row(Estimator.HT)
    adjusted = report.row(Estimator.ADJUSTED_BASE)
    assert adjusted.empirical_variance <= ht.empirical_variance + 3 * ht.variance_mc_se
    assert adjusted.mean_variance >= adjusted.empirical_variance - 3 * adjusted.variance_mc_se
    assert adjusted.coverage >= 0.94


@pytest.mark.slow
@pytest.mark.parametrize("effect", [0.0, 2.0])
@pytest.mark.parametrize("p", [0.3, 0.5])
def test_both_estimators_are_unbiased(effect: float, p: float) -> None:
    dgp = DgpConfig(n=200, p=p, effect=effect, seed=21)
    config = McConfig(estimators=[Estimator.HT, Estimator.ADJUSTED_BASE])
    report = monte_carlo(dgp, config, replications=2000)
    for row in report.rows:
        assert abs(row.mean_tau_hat - row.tau_bar) <= 4 * row.mc_se, row.estimator


def _ess_per_replication(dgp: DgpConfig) -> np.ndarray:
    config = McConfig(estimators=[Estimator.ADJUSTED_BASE, Estimator.ADJUSTED_PAIR_SCORE])
    report = monte_carlo(dgp, config, replications=200)
    return report.variances["adjusted_base"] / report.variances["adjusted_pair_score"]


@pytest.mark.slow
def test_informative_pair_scores_raise_ess_in_most_replications() -> None:
    dgp = DgpConfig(name="informative_latent", n=300, signal_share=0.8, covariate_share=0.1)
    ess = _ess_per_replication(dgp)
    assert np.mean(ess > 1.2) >= 0.90


@pytest.mark.slow
def test_pure_noise_pair_scores_leave_ess_near_one() -> None:
    dgp = DgpConfig(name="noise_latent", n=300, signal_share=0.0)
    ess = _ess_per_replication(dgp)
    assert 0.95 <= float(np.mean(ess)) <= 1.05
