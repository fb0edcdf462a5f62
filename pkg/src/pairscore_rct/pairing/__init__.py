"""Stratification, pair planning and pair-score aggregation."""

from .plan import PairingConfig, PairPlan, PlannedPair, Presentation, plan_pairs
from .scores import (
    PairComparison,
    PairScoreSet,
    Verdict,
    aggregate_scores,
    order_effect_summary,
    read_comparisons_csv,
    write_comparisons_csv,
)
from .strata import (
    GroupSpec,
    StratificationBasis,
    StratifyConfig,
    StratumAssignment,
    single_stratum,
    stratify,
    stratify_by_label,
)

__all__ = [
    "GroupSpec",
    "PairComparison",
    "PairPlan",
    "PairScoreSet",
    "PairingConfig",
    "PlannedPair",
    "Presentation",
    "StratificationBasis",
    "StratifyConfig",
    "StratumAssignment",
    "Verdict",
    "aggregate_scores",
    "order_effect_summary",
    "plan_pairs",
    "read_comparisons_csv",
    "single_stratum",
    "stratify",
    "stratify_by_label",
    "write_comparisons_csv",
]
