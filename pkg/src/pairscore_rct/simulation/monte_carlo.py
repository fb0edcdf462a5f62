"""Monte-Carlo harness for the design-based properties of the estimators."""

from __future__ import annotations

import asyncio
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..data import Experiment, encode_covariates
from ..errors import DataValidationError
from ..estimation import (
    EstimateResult,
    Imputations,
    SyntheticTruth,
    adjusted_estimate,
    ht_estimate,
)
from ..imputation import LearnerConfig, impute
from ..llm import (
    ComparisonClient,
    MockProvider,
    MockSettings,
    PromptTemplate,
    ProviderConfig,
    ProviderKind,
    QuestionSpec,
    SentenceTemplate,
)
from ..pairing import (
    GroupSpec,
    PairScoreSet,
    StratumAssignment,
    aggregate_scores,
    plan_pairs,
    single_stratum,
    stratify,
)
from .dgp import DgpConfig, assign, build_experiment, draw_population

MIN_REPLICATIONS = 100
COVERAGE_Z = 1.96
PAIR_SCORE_COLUMN = "pair_score"
SIMULATION_QUESTION = QuestionSpec(
    id=PAIR_SCORE_COLUMN, target_description="likely to have the higher outcome"
)


class Estimator(str, Enum):
    HT = "ht"
    ADJUSTED_BASE = "adjusted_base"
    ADJUSTED_PAIR_SCORE = "adjusted_pair_score"
    PERFECT = "perfect"


class StratifySource(str, Enum):
    """What the comparison strata are cut from in a replication."""

    FIRST_COVARIATE = "first_covariate"
    BASE_PREDICTION = "base_prediction"
    NONE = "none"


class McConfig(BaseModel):
    """Pipeline settings used inside every replication."""

    learner: LearnerConfig = Field(default_factory=LearnerConfig)
    estimators: list[Estimator] = Field(default_factory=lambda: list(Estimator))
    stratify_on: StratifySource = StratifySource.FIRST_COVARIATE
    groups: GroupSpec = Field(default_factory=lambda: GroupSpec(group_size=10))
    max_pairs_per_stratum: int | None = Field(default=None, ge=1)
    noise_scale: float = Field(default=0.5, ge=0.0)
    refusal_rate: float = Field(default=0.0, ge=0.0, lt=1.0)
    redraw_population: bool = False
    n_jobs: int = Field(default=1, ge=1)

    model_config = ConfigDict(extra="forbid")


@dataclass(frozen=True, slots=True)
class McRow:
    """Summary of one estimator over all replications."""

    estimator: str
    replications: int
    tau_bar: float
    mean_tau_hat: float
    bias: float
    mc_se: float
    mean_variance: float
    empirical_variance: float
    variance_mc_se: float
    coverage: float
    coverage_mc_se: float


@dataclass(frozen=True)
class McReport:
    dgp: DgpConfig
    rows: tuple[McRow, ...]
    tau_hats: dict[str, np.ndarray] = field(default_factory=dict)
    variances: dict[str, np.ndarray] = field(default_factory=dict)
    targets: np.ndarray = field(default_factory=lambda: np.empty(0))

    def row(self, estimator: Estimator | str) -> McRow:
        key = estimator.value if isinstance(estimator, Estimator) else estimator
        for row in self.rows:
            if row.estimator == key:
                return row
        raise DataValidationError(f"no Monte-Carlo row for estimator '{key}'")

    def frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(row) for row in self.rows])
        frame.insert(0, "dgp", self.dgp.name)
        return frame


def pair_scores(
    experiment: Experiment,
    truth: SyntheticTruth,
    strata: StratumAssignment,
    config: McConfig,
    seed: int,
) -> PairScoreSet:
    """Plan within-stratum pairs and score them with a mock model that sees the latent."""

    if truth.latent is None:
        raise DataValidationError("the synthetic truth carries no latent quality")
    latent = dict(zip(experiment.ids, truth.latent.tolist(), strict=True))
    provider = MockProvider(
        ProviderConfig(
            kind=ProviderKind.MOCK,
            max_in_flight=64,
            mock=MockSettings(
                noise_scale=config.noise_scale, refusal_rate=config.refusal_rate, seed=seed
            ),
        ),
        latent=latent,
    )
    plan = plan_pairs(
        strata,
        [SIMULATION_QUESTION.id],
        seed,
        max_pairs_per_stratum=config.max_pairs_per_stratum,
    )
    units = dict(zip(experiment.ids, experiment.units, strict=True))
    client = ComparisonClient(
        provider, _simulation_template(experiment), [SIMULATION_QUESTION], units
    )
    comparisons = asyncio.run(client.run(plan))
    return aggregate_scores(comparisons, strata, plan=plan, keys=[SIMULATION_QUESTION.id])


def _simulation_template(experiment: Experiment) -> PromptTemplate:
    return PromptTemplate(
        sentences={
            name: SentenceTemplate(text=f"Their {name} reading is {{value}}.")
            for name in experiment.covariate_names
        }
    )


def _strata(
    experiment: Experiment, x: np.ndarray, config: McConfig
) -> StratumAssignment | None:
    if config.stratify_on is StratifySource.NONE:
        return single_stratum(experiment.ids)
    if config.stratify_on is StratifySource.FIRST_COVARIATE:
        return stratify(x[:, 0], config.groups, unit_ids=experiment.ids)
    return None


def _base_prediction_strata(
    experiment: Experiment, imputations: Imputations, config: McConfig
) -> StratumAssignment:
    prediction = imputations.blend(experiment.constant_p())
    return stratify(prediction, config.groups, unit_ids=experiment.ids)


def _replicate(
    experiment: Experiment,
    truth: SyntheticTruth,
    config: McConfig,
    seed: int,
    fixed_scores: PairScoreSet | None,
) -> dict[str, EstimateResult]:
    results: dict[str, EstimateResult] = {}
    wanted = set(config.estimators)
    if Estimator.HT in wanted:
        results[Estimator.HT.value] = ht_estimate(experiment)

    base_imputations: Imputations | None = None
    if wanted & {Estimator.ADJUSTED_BASE, Estimator.ADJUSTED_PAIR_SCORE}:
        base_x = encode_covariates(experiment)
        base_imputations, _ = impute(experiment, base_x, config.learner)
        if Estimator.ADJUSTED_BASE in wanted:
            results[Estimator.ADJUSTED_BASE.value] = adjusted_estimate(
                experiment, base_imputations, label=Estimator.ADJUSTED_BASE.value
            )

    if Estimator.ADJUSTED_PAIR_SCORE in wanted:
        scores = fixed_scores
        if scores is None:
            assert base_imputations is not None
            strata = _base_prediction_strata(experiment, base_imputations, config)
            scores = pair_scores(experiment, truth, strata, config, seed)
        x_llm = encode_covariates(experiment, scores.as_extras())
        imputations, _ = impute(experiment, x_llm, config.learner)
        results[Estimator.ADJUSTED_PAIR_SCORE.value] = adjusted_estimate(
            experiment, imputations, label=Estimator.ADJUSTED_PAIR_SCORE.value
        )

    if Estimator.PERFECT in wanted:
        perfect = Imputations(y_hat_t=truth.y_t, y_hat_c=truth.y_c, cross_fitted=True)
        results[Estimator.PERFECT.value] = adjusted_estimate(
            experiment, perfect, label=Estimator.PERFECT.value
        )
    return results


def _summarize(
    estimator: str, tau_hats: np.ndarray, variances: np.ndarray, targets: np.ndarray
) -> McRow:
    r = tau_hats.size
    errors = tau_hats - targets
    empirical = float(np.var(tau_hats - targets + targets.mean(), ddof=1))
    covered = np.abs(errors) <= COVERAGE_Z * np.sqrt(variances)
    coverage = float(covered.mean())
    return McRow(
        estimator=estimator,
        replications=r,
        tau_bar=float(targets.mean()),
        mean_tau_hat=float(tau_hats.mean()),
        bias=float(errors.mean()),
        mc_se=float(np.std(errors, ddof=1) / math.sqrt(r)),
        mean_variance=float(variances.mean()),
        empirical_variance=empirical,
        variance_mc_se=empirical * math.sqrt(2.0 / (r - 1)),
        coverage=coverage,
        coverage_mc_se=math.sqrt(coverage * (1.0 - coverage) / r),
    )


def monte_carlo(
    dgp: DgpConfig,
    config: McConfig | None = None,
    replications: int = 1000,
    *,
    master_seed: int | None = None,
    progress: Callable[[int], None] | None = None,
) -> McReport:
    """Rerun assignment and the estimation pipeline `replications` times.

    Replication r draws its assignment from ``master_seed + r``. Potential outcomes are drawn
    once from the DGP seed and held fixed unless `redraw_population` is set. Pair scores are
    computed once and reused when their strata cannot depend on the assignment.
    """

    config = config or McConfig()
    if replications < MIN_REPLICATIONS:
        raise DataValidationError(
            f"at least {MIN_REPLICATIONS} replications are required, got {replications}"
        )
    master = dgp.seed if master_seed is None else master_seed
    x, truth = draw_population(dgp, np.random.default_rng(dgp.seed))
    template_z = assign(dgp.n, dgp.p, np.random.default_rng(master))
    template = build_experiment(dgp, x, truth, template_z)

    fixed_scores: PairScoreSet | None = None
    reuse = not config.redraw_population and (
        config.stratify_on is not StratifySource.BASE_PREDICTION
    )
    if reuse and Estimator.ADJUSTED_PAIR_SCORE in config.estimators:
        strata = _strata(template, x, config)
        assert strata is not None
        fixed_scores = pair_scores(template, truth, strata, config, master)

    def run(r: int) -> tuple[dict[str, EstimateResult], float]:
        rng = np.random.default_rng(master + r)
        if config.redraw_population:
            x_r, truth_r = draw_population(dgp, rng)
            experiment = build_experiment(dgp, x_r, truth_r, assign(dgp.n, dgp.p, rng))
            scores = None
            if Estimator.ADJUSTED_PAIR_SCORE in config.estimators:
                strata = _strata(experiment, x_r, config)
                if strata is not None:
                    scores = pair_scores(experiment, truth_r, strata, config, master + r)
            results = _replicate(experiment, truth_r, config, master + r, scores)
            target = truth_r.tau_bar
        else:
            z = assign(dgp.n, dgp.p, rng)
            experiment = replace(template, z=z, y=np.where(z == 1, truth.y_t, truth.y_c))
            results = _replicate(experiment, truth, config, master + r, fixed_scores)
            target = truth.tau_bar
        if progress is not None:
            progress(r)
        return results, target

    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            outcomes = list(pool.map(run, range(replications)))
    else:
        outcomes = [run(r) for r in range(replications)]

    targets = np.array([target for _, target in outcomes])
    tau_hats: dict[str, np.ndarray] = {}
    variances: dict[str, np.ndarray] = {}
    rows = []
    for estimator in config.estimators:
        key = estimator.value
        tau_hats[key] = np.array([results[key].tau_hat for results, _ in outcomes])
        variances[key] = np.array([results[key].variance for results, _ in outcomes])
        rows.append(_summarize(key, tau_hats[key], variances[key], targets))
        logger.debug(
            f"{dgp.name}/{key}: bias={rows[-1].bias:.4f} coverage={rows[-1].coverage:.3f}"
        )
    return McReport(
        dgp=dgp, rows=tuple(rows), tau_hats=tau_hats, variances=variances, targets=targets
    )
