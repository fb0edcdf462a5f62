"""Pipeline stages and the runner that keeps their artifacts current."""

from __future__ import annotations

import asyncio
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import logfire
import numpy as np
import pandas as pd
from loguru import logger
from pydantic_core import to_jsonable_python

from ..config import PipelineSettings, config_digest, digest
from ..data import (
    Experiment,
    encode_covariates,
    load_experiment,
)
from ..errors import DataValidationError, StageError
from ..estimation import ht_estimate, write_estimates_csv
from ..evaluation import (
    compare_models,
    regression_table,
    render_comparison_text,
    significance_test,
    write_comparison_csv,
    write_significance_csv,
)
from ..imputation import impute
from ..llm import ComparisonClient, ProviderKind, ResponseCache, create_provider
from ..pairing import (
    PairComparison,
    PairPlan,
    PairScoreSet,
    StratificationBasis,
    StratumAssignment,
    aggregate_scores,
    order_effect_summary,
    plan_pairs,
    read_comparisons_csv,
    single_stratum,
    stratify,
    stratify_by_label,
    write_comparisons_csv,
)
from ..simulation import run_suite, suite_by_name, write_mc_csv
from .manifest import RunManifest, Stage, StageRecord, file_digest, utc_now

EXPERIMENT_CSV = "experiment.csv"
PREDICTIONS_CSV = "base_predictions.csv"
STRATA_CSV = "strata.csv"
PAIRS_CSV = "pairs.csv"
COMPARISONS_CSV = "comparisons.csv"
SCORES_CSV = "scores.csv"
ESTIMATES_CSV = "estimates.csv"
COMPARISON_CSV = "comparison.csv"
COMPARISON_TXT = "comparison.txt"
IMPORTANCE_CSV = "importance.csv"
SIGNIFICANCE_CSV = "significance.csv"
REGRESSION_CSV = "regression_table.csv"
ORDER_EFFECTS_CSV = "order_effects.csv"
MONTE_CARLO_CSV = "monte_carlo.csv"

PIPELINE_ORDER = (
    Stage.INGEST,
    Stage.IMPUTE,
    Stage.STRATIFY,
    Stage.PAIR,
    Stage.QUERY,
    Stage.SCORE,
    Stage.ESTIMATE,
    Stage.EVALUATE,
)


@dataclass(frozen=True)
class StageContext:
    """Artifact access for a stage; downstream inputs are always read back from disk."""

    settings: PipelineSettings
    out_dir: Path

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def experiment(self) -> Experiment:
        _, schema = self.settings.require_dataset()
        return load_experiment(self.path(EXPERIMENT_CSV), schema)

    def strata(self) -> StratumAssignment:
        return StratumAssignment.read_csv(self.path(STRATA_CSV), self.settings.stratify.basis)

    def plan(self) -> PairPlan:
        return PairPlan.read_csv(
            self.path(PAIRS_CSV),
            questions=[question.id for question in self.settings.require_questions()],
            seed=self.settings.seed,
            ordered=self.settings.pairing.ordered,
        )

    def scores(self) -> PairScoreSet:
        return PairScoreSet.read_csv(self.path(SCORES_CSV))

    def predictions(self) -> pd.DataFrame:
        return pd.read_csv(self.path(PREDICTIONS_CSV), dtype={"unit_id": str})


StageFn = Callable[[StageContext], None]
Needs = Callable[[PipelineSettings], tuple[str, ...]]


@dataclass(frozen=True, slots=True)
class StageSpec:
    stage: Stage
    run: StageFn
    needs: Needs
    produces: tuple[str, ...]
    uses: Callable[[PipelineSettings], Any]
    sources: Callable[[PipelineSettings], tuple[Path, ...]]


_REGISTRY: dict[Stage, StageSpec] = {}


def _none(_: PipelineSettings) -> tuple:
    return ()


def stage(
    name: Stage,
    *,
    produces: tuple[str, ...],
    uses: Callable[[PipelineSettings], Any],
    needs: tuple[str, ...] | Needs = (),
    sources: Callable[[PipelineSettings], tuple[Path, ...]] = _none,
) -> Callable[[StageFn], StageFn]:
    """Register a stage with its artifacts and the settings slice its digest covers."""

    def resolve(value: tuple[str, ...] | Needs) -> Needs:
        if callable(value):
            return value
        return lambda _settings: value

    def decorator(run: StageFn) -> StageFn:
        _REGISTRY[name] = StageSpec(
            stage=name,
            run=run,
            needs=resolve(needs),
            produces=produces,
            uses=uses,
            sources=sources,
        )
        return run

    return decorator


def available_stages() -> dict[Stage, StageSpec]:
    return dict(_REGISTRY)


def _producer_of(artifact: str) -> str:
    for spec in _REGISTRY.values():
        if artifact in spec.produces:
            return spec.stage.value
    return "?"


def _aligned_scores(experiment: Experiment, scores: PairScoreSet) -> dict[str, np.ndarray]:
    """Score columns reordered to the experiment's unit order."""

    position = {unit_id: i for i, unit_id in enumerate(scores.unit_ids)}
    absent = [unit_id for unit_id in experiment.ids if unit_id not in position]
    if absent:
        raise DataValidationError(
            f"{len(absent)} unit(s) have no pair-score rows, e.g. '{absent[0]}'"
        )
    order = np.array([position[unit_id] for unit_id in experiment.ids], dtype=np.intp)
    return {key: column[order] for key, column in scores.as_extras().items()}


def _aligned_predictions(experiment: Experiment, frame: pd.DataFrame) -> np.ndarray:
    series = frame.set_index("unit_id")["prediction"]
    missing = [unit_id for unit_id in experiment.ids if unit_id not in series.index]
    if missing:
        raise DataValidationError(f"no base prediction for unit(s) {', '.join(missing[:5])}")
    return series.loc[list(experiment.ids)].to_numpy(dtype=float)


def _numeric_column(experiment: Experiment, name: str) -> list[float]:
    values = experiment.column(name)
    if any(value is None or isinstance(value, str) for value in values):
        raise DataValidationError(f"stratification column '{name}' must be numeric and complete")
    return [float(value) for value in values]  # type: ignore[arg-type]


def _dataset_source(settings: PipelineSettings) -> tuple[Path, ...]:
    path, _ = settings.require_dataset()
    return (path,)


@stage(
    Stage.INGEST,
    produces=(EXPERIMENT_CSV,),
    uses=lambda s: s.dataset,
    sources=_dataset_source,
)
def ingest(ctx: StageContext) -> None:
    path, schema = ctx.settings.require_dataset()
    experiment = load_experiment(path, schema)
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    frame[schema.required_columns()].to_csv(ctx.path(EXPERIMENT_CSV), index=False)
    logger.info(
        f"Ingested {experiment.n} units ({experiment.n_t} treated, {experiment.n_c} control, "
        f"{len(experiment.covariate_names)} covariates)"
    )


@stage(
    Stage.IMPUTE,
    needs=(EXPERIMENT_CSV,),
    produces=(PREDICTIONS_CSV,),
    uses=lambda s: s.learner,
)
def impute_base(ctx: StageContext) -> None:
    experiment = ctx.experiment()
    _, schema = ctx.settings.require_dataset()
    x = encode_covariates(experiment, missing_as_level=schema.missing_as_level)
    imputations, report = impute(experiment, x, ctx.settings.learner)
    p = experiment.p
    frame = pd.DataFrame(
        {
            "unit_id": experiment.ids,
            "y_hat_t": imputations.y_hat_t,
            "y_hat_c": imputations.y_hat_c,
            "prediction": p * imputations.y_hat_c + (1.0 - p) * imputations.y_hat_t,
        }
    )
    frame.to_csv(ctx.path(PREDICTIONS_CSV), index=False)
    logger.info(
        f"Base model ({report.learner}) cross-fitted on {x.n_columns} column(s); "
        + ", ".join(f"mse[{arm}]={value:.4g}" for arm, value in report.mse.items())
    )


def _stratify_needs(settings: PipelineSettings) -> tuple[str, ...]:
    config = settings.stratify
    if config.basis is StratificationBasis.OOB_PREDICTION_QUANTILES and not config.column:
        return (EXPERIMENT_CSV, PREDICTIONS_CSV)
    return (EXPERIMENT_CSV,)


@stage(
    Stage.STRATIFY,
    needs=_stratify_needs,
    produces=(STRATA_CSV,),
    uses=lambda s: s.stratify,
)
def stratify_units(ctx: StageContext) -> None:
    config = ctx.settings.stratify
    experiment = ctx.experiment()
    if config.basis is StratificationBasis.NONE:
        strata = single_stratum(experiment.ids)
    elif config.basis is StratificationBasis.CATEGORICAL_COLUMN:
        assert config.column is not None
        strata = stratify_by_label(experiment.column(config.column), unit_ids=experiment.ids)
    elif config.column:
        strata = stratify(
            _numeric_column(experiment, config.column), config.groups, unit_ids=experiment.ids
        )
    else:
        predictions = _aligned_predictions(experiment, ctx.predictions())
        strata = stratify(predictions, config.groups, unit_ids=experiment.ids)
    strata.write_csv(ctx.path(STRATA_CSV))
    sizes = strata.sizes()
    logger.info(
        f"{len(sizes)} comparison strata, sizes {min(sizes.values())}-{max(sizes.values())}"
    )


@stage(
    Stage.PAIR,
    needs=(STRATA_CSV,),
    produces=(PAIRS_CSV,),
    uses=lambda s: {
        "seed": s.seed,
        "pairing": s.pairing,
        "questions": [question.id for question in s.questions],
    },
)
def pair_units(ctx: StageContext) -> None:
    settings = ctx.settings
    plan = plan_pairs(
        ctx.strata(),
        [question.id for question in settings.require_questions()],
        settings.seed,
        max_pairs_per_stratum=settings.pairing.max_pairs_per_stratum,
        ordered=settings.pairing.ordered,
    )
    plan.write_csv(ctx.path(PAIRS_CSV))
    logger.info(f"Planned {len(plan.pairs)} pair presentations x {len(plan.questions)} question(s)")


def _mock_latent(experiment: Experiment, settings: PipelineSettings) -> dict[str, float]:
    mock = settings.provider.mock
    if mock.latent_column is None:
        if not mock.latent:
            raise DataValidationError(
                "the mock provider needs `provider.mock.latent` or `provider.mock.latent_column`"
            )
        return dict(mock.latent)
    values = experiment.column(mock.latent_column)
    latent = {}
    for unit_id, value in zip(experiment.ids, values, strict=True):
        if value is None or isinstance(value, str):
            raise DataValidationError(
                f"latent column '{mock.latent_column}' must be numeric and complete "
                f"(unit '{unit_id}')"
            )
        latent[unit_id] = float(value)
    return latent


async def _collect(ctx: StageContext) -> list[PairComparison]:
    settings = ctx.settings
    experiment = ctx.experiment()
    plan = ctx.plan()
    config = settings.provider
    kwargs: dict[str, Any] = {"answer_word": settings.template.unit_label}
    if config.kind is ProviderKind.MOCK:
        # The master seed drives the mock's draws as well as the pair plan.
        config = config.model_copy(
            update={"mock": config.mock.model_copy(update={"seed": settings.seed})}
        )
        kwargs["latent"] = _mock_latent(experiment, settings)
    provider = create_provider(config, **kwargs)
    try:
        client = ComparisonClient(
            provider,
            settings.template,
            settings.require_questions(),
            dict(zip(experiment.ids, experiment.units, strict=True)),
            cache=ResponseCache(settings.effective_cache_path()),
        )
        return await client.run(plan)
    finally:
        await provider.aclose()


@stage(
    Stage.QUERY,
    needs=(EXPERIMENT_CSV, PAIRS_CSV),
    produces=(COMPARISONS_CSV,),
    uses=lambda s: {
        "seed": s.seed,
        "template": s.template,
        "questions": s.questions,
        "provider": s.fingerprint()["provider"],
    },
)
def query(ctx: StageContext) -> None:
    comparisons = asyncio.run(_collect(ctx))
    write_comparisons_csv(comparisons, ctx.path(COMPARISONS_CSV))


@stage(
    Stage.SCORE,
    needs=(STRATA_CSV, PAIRS_CSV, COMPARISONS_CSV),
    produces=(SCORES_CSV,),
    uses=lambda s: s.score_keys(),
)
def score(ctx: StageContext) -> None:
    comparisons = read_comparisons_csv(ctx.path(COMPARISONS_CSV))
    scores = aggregate_scores(
        comparisons, ctx.strata(), plan=ctx.plan(), keys=ctx.settings.score_keys()
    )
    scores.write_csv(ctx.path(SCORES_CSV))


@stage(
    Stage.ESTIMATE,
    needs=(EXPERIMENT_CSV, SCORES_CSV),
    produces=(ESTIMATES_CSV, COMPARISON_CSV, COMPARISON_TXT, IMPORTANCE_CSV),
    uses=lambda s: {"learner": s.learner, "recipes": s.effective_recipes()},
)
def estimate(ctx: StageContext) -> None:
    settings = ctx.settings
    _, schema = settings.require_dataset()
    experiment = ctx.experiment()
    extras = _aligned_scores(experiment, ctx.scores())
    report = compare_models(
        experiment,
        settings.effective_recipes(),
        settings.learner,
        extras=extras,
        missing_as_level=schema.missing_as_level,
    )
    baseline = [
        ht_estimate(members, stratum=label) for label, members in experiment.by_stratum().items()
    ]
    write_estimates_csv([*baseline, *report.results], ctx.path(ESTIMATES_CSV))
    write_comparison_csv(report, ctx.path(COMPARISON_CSV))
    text = render_comparison_text(report)
    ctx.path(COMPARISON_TXT).write_text(text, encoding="utf-8")
    report.importance_frame().to_csv(ctx.path(IMPORTANCE_CSV), index=False)
    logger.info("\n" + text)


@stage(
    Stage.EVALUATE,
    needs=(EXPERIMENT_CSV, PREDICTIONS_CSV, SCORES_CSV, COMPARISONS_CSV),
    produces=(SIGNIFICANCE_CSV, REGRESSION_CSV, ORDER_EFFECTS_CSV),
    uses=lambda s: {"alpha": s.alpha},
)
def evaluate(ctx: StageContext) -> None:
    _, schema = ctx.settings.require_dataset()
    experiment = ctx.experiment()
    extras = _aligned_scores(experiment, ctx.scores())
    base = encode_covariates(experiment, missing_as_level=schema.missing_as_level)
    predictions = _aligned_predictions(experiment, ctx.predictions())

    reports = significance_test(
        experiment, base, extras, oob_predictions=predictions, alpha=ctx.settings.alpha
    )
    write_significance_csv(reports, ctx.path(SIGNIFICANCE_CSV))
    regression_table(experiment, base, extras, oob_predictions=predictions).to_csv(
        ctx.path(REGRESSION_CSV)
    )
    order = order_effect_summary(read_comparisons_csv(ctx.path(COMPARISONS_CSV)))
    order.to_csv(ctx.path(ORDER_EFFECTS_CSV), index=False)
    for row in order.itertuples(index=False):
        if row.valid and row.p_value < ctx.settings.alpha:
            logger.warning(
                f"'{row.question}': first-shown unit chosen in {row.first_share:.1%} of "
                f"{row.valid} valid verdicts (p={row.p_value:.3g})"
            )


@stage(
    Stage.SIMULATE,
    produces=(MONTE_CARLO_CSV,),
    uses=lambda s: {"seed": s.seed, "simulation": s.simulation},
)
def simulate(ctx: StageContext) -> None:
    settings = ctx.settings
    config = settings.simulation
    dgps = suite_by_name(config.suite, n=config.n, seed=settings.seed)
    reports = run_suite(
        dgps, config.monte_carlo, config.replications, master_seed=settings.seed
    )
    write_mc_csv(reports, ctx.path(MONTE_CARLO_CSV))


def open_manifest(settings: PipelineSettings, *, force: bool = False) -> RunManifest:
    """Load the run manifest, refusing a changed configuration unless `force` is set."""

    current = config_digest(settings)
    manifest = RunManifest.load(settings.out_dir)
    if manifest is None:
        return RunManifest(
            config_digest=current,
            seed=settings.seed,
            provider_kind=settings.provider.kind.value,
        )
    if manifest.config_digest != current:
        if not force:
            raise StageError(
                f"the configuration changed since {settings.out_dir} was written; "
                "pass --force to overwrite its artifacts or choose another --out-dir",
                stage="manifest",
            )
        logger.warning(f"Configuration changed; overwriting artifacts in {settings.out_dir}")
        manifest.config_digest = current
        manifest.seed = settings.seed
        manifest.provider_kind = settings.provider.kind.value
    return manifest


def _inputs(spec: StageSpec, ctx: StageContext) -> dict[str, str]:
    needed = spec.needs(ctx.settings)
    missing = [name for name in needed if not ctx.path(name).exists()]
    if missing:
        hints = ", ".join(f"{name} (from `{_producer_of(name)}`)" for name in missing)
        raise StageError(f"missing upstream artifact(s): {hints}", stage=spec.stage.value)
    inputs = {name: file_digest(ctx.path(name)) for name in needed}
    for source in spec.sources(ctx.settings):
        if not source.exists():
            raise DataValidationError(f"data file not found: {source}")
        inputs[str(source)] = file_digest(source)
    return inputs


def run_stage(
    name: Stage | str, settings: PipelineSettings, *, force: bool = False
) -> StageRecord:
    """Run one stage unless its recorded digest already matches; update the manifest."""

    spec = _REGISTRY[Stage(name)]
    ctx = StageContext(settings=settings, out_dir=settings.out_dir)
    manifest = open_manifest(settings, force=force)
    inputs = _inputs(spec, ctx)
    stage_digest = digest(
        {
            "stage": spec.stage.value,
            "uses": to_jsonable_python(spec.uses(settings)),
            "inputs": inputs,
        }
    )
    if not force and manifest.is_current(spec.stage, stage_digest, ctx.out_dir):
        logger.info(f"{spec.stage.value}: up to date")
        return manifest.stages[spec.stage]

    started = utc_now()
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    with logfire.span("stage {stage}", stage=spec.stage.value, out_dir=str(ctx.out_dir)):
        spec.run(ctx)
    entry = StageRecord(
        stage=spec.stage,
        digest=stage_digest,
        inputs=inputs,
        outputs={artifact: file_digest(ctx.path(artifact)) for artifact in spec.produces},
        started_at=started,
        finished_at=utc_now(),
    )
    manifest.record(entry)
    manifest.save(ctx.out_dir)
    logger.info(f"{spec.stage.value}: wrote {', '.join(spec.produces)}")
    return entry


def run_pipeline(
    settings: PipelineSettings,
    stages: Sequence[Stage] = PIPELINE_ORDER,
    *,
    force: bool = False,
) -> list[StageRecord]:
    return [run_stage(name, settings, force=force) for name in stages]
