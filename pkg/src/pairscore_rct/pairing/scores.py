"""Pairwise verdicts and their aggregation into adjusted pair scores."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import binomtest

from ..errors import DataValidationError
from .plan import PairPlan, Presentation
from .strata import StratumAssignment


class Verdict(str, Enum):
    FIRST = "first"
    SECOND = "second"
    INVALID = "invalid"


class PairComparison(BaseModel):
    """The verdict for one planned pair under one score key.

    `question` is the score key: the question id, or ``<question id>.<quality>`` for joint
    multi-quality questions. `raw` references the cached response that produced the verdict.
    """

    unit_a: str
    unit_b: str
    question: str
    verdict: Verdict
    attempts: int = Field(default=1, ge=1, le=2)
    presentation: Presentation = Presentation.A_FIRST
    raw: str | None = None

    model_config = ConfigDict(frozen=True)

    @property
    def shown(self) -> tuple[str, str]:
        if self.presentation is Presentation.A_FIRST:
            return self.unit_a, self.unit_b
        return self.unit_b, self.unit_a

    @property
    def winner(self) -> str | None:
        """The chosen unit id, independent of presentation order; None when invalid."""

        if self.verdict is Verdict.INVALID:
            return None
        first, second = self.shown
        return first if self.verdict is Verdict.FIRST else second

    @property
    def loser(self) -> str | None:
        winner = self.winner
        if winner is None:
            return None
        return self.unit_b if winner == self.unit_a else self.unit_a


@dataclass(frozen=True, eq=False)
class PairScoreSet:
    """Wins and performed comparisons per unit and score key.

    The adjusted pair score is wins / performed; units without any valid comparison carry NaN,
    which covariate encoding turns into 0 plus a missing indicator.
    """

    unit_ids: tuple[str, ...]
    keys: tuple[str, ...]
    wins: dict[str, np.ndarray] = field(default_factory=dict)
    performed: dict[str, np.ndarray] = field(default_factory=dict)

    def scores(self, key: str) -> np.ndarray:
        if key not in self.wins:
            raise DataValidationError(f"no pair scores for '{key}'")
        performed = self.performed[key]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(performed > 0, self.wins[key] / performed, np.nan)

    def as_extras(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Score columns keyed by (optionally prefixed) score key, ready for `append_columns`."""

        return {f"{prefix}{key}": self.scores(key) for key in self.keys}

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "unit_id": unit_id,
                "question": key,
                "score": self.scores(key)[index],
                "wins": int(self.wins[key][index]),
                "performed": int(self.performed[key][index]),
            }
            for key in self.keys
            for index, unit_id in enumerate(self.unit_ids)
        ]
        return pd.DataFrame(rows, columns=["unit_id", "question", "score", "wins", "performed"])

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def read_csv(cls, path: str | Path) -> PairScoreSet:
        frame = pd.read_csv(path, dtype={"unit_id": str, "question": str})
        missing = {"unit_id", "question", "wins", "performed"} - set(frame.columns)
        if missing:
            raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
        unit_ids = tuple(dict.fromkeys(frame["unit_id"]))
        keys = tuple(dict.fromkeys(frame["question"]))
        position = {unit_id: i for i, unit_id in enumerate(unit_ids)}
        wins = {key: np.zeros(len(unit_ids)) for key in keys}
        performed = {key: np.zeros(len(unit_ids), dtype=np.int64) for key in keys}
        for row in frame.itertuples(index=False):
            wins[row.question][position[row.unit_id]] = float(row.wins)
            performed[row.question][position[row.unit_id]] = int(row.performed)
        return cls(unit_ids=unit_ids, keys=keys, wins=wins, performed=performed)


def _question_of(key: str) -> str:
    return key.split(".", 1)[0]


COMPARISON_COLUMNS = ["unit_a", "unit_b", "question", "verdict", "attempts", "presentation", "raw"]


def write_comparisons_csv(comparisons: Iterable[PairComparison], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [comparison.model_dump(mode="json") for comparison in comparisons]
    pd.DataFrame(rows, columns=COMPARISON_COLUMNS).to_csv(path, index=False)
    return path


def read_comparisons_csv(path: str | Path) -> list[PairComparison]:
    """Load comparisons, possibly hand-edited; every row is validated."""

    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = set(COMPARISON_COLUMNS[:4]) - set(frame.columns)
    if missing:
        raise DataValidationError(f"{path}: missing columns {sorted(missing)}")
    comparisons = []
    for row in frame.to_dict(orient="records"):
        values = {key: value for key, value in row.items() if value != ""}
        try:
            comparisons.append(PairComparison.model_validate(values))
        except ValueError as exc:
            raise DataValidationError(f"{path}: invalid comparison row {row}: {exc}") from exc
    return comparisons


def aggregate_scores(
    comparisons: Iterable[PairComparison],
    strata: StratumAssignment,
    *,
    plan: PairPlan | None = None,
    keys: Sequence[str] | None = None,
) -> PairScoreSet:
    """Count wins and valid comparisons per unit; arrival order does not matter.

    Invalid verdicts are dropped from both counts. A second comparison of the same pair under
    the same key is an error, except for the two presentations of an ordered-mode plan.
    """

    comparisons = list(comparisons)
    position = {unit_id: i for i, unit_id in enumerate(strata.unit_ids)}
    planned = plan.unordered_pairs() if plan is not None else None
    ordered = plan.ordered if plan is not None else False
    score_keys = (
        tuple(keys) if keys is not None else tuple(sorted({c.question for c in comparisons}))
    )

    wins = {key: np.zeros(strata.n) for key in score_keys}
    performed = {key: np.zeros(strata.n, dtype=np.int64) for key in score_keys}
    seen: set[tuple] = set()
    dropped = 0

    for comparison in comparisons:
        a, b = comparison.unit_a, comparison.unit_b
        for unit_id in (a, b):
            if unit_id not in position:
                raise DataValidationError(f"comparison references unknown unit '{unit_id}'")
        if a == b:
            raise DataValidationError(f"unit '{a}' compared with itself")
        if strata.stratum_of[position[a]] != strata.stratum_of[position[b]]:
            raise DataValidationError(f"pair ({a}, {b}) crosses strata")
        if plan is not None and planned is not None:
            if frozenset((a, b)) not in planned:
                raise DataValidationError(f"pair ({a}, {b}) is not in the plan")
            if _question_of(comparison.question) not in plan.questions:
                raise DataValidationError(f"question '{comparison.question}' is not in the plan")
        if comparison.question not in wins:
            raise DataValidationError(f"unexpected score key '{comparison.question}'")

        identity: tuple = (frozenset((a, b)), comparison.question)
        if ordered:
            identity += (comparison.shown,)
        if identity in seen:
            raise DataValidationError(
                f"duplicate comparison for pair ({a}, {b}) and '{comparison.question}'"
            )
        seen.add(identity)

        winner = comparison.winner
        if winner is None:
            dropped += 1
            continue
        wins[comparison.question][position[winner]] += 1
        performed[comparison.question][position[a]] += 1
        performed[comparison.question][position[b]] += 1

    if dropped:
        logger.warning(f"Dropped {dropped} invalid comparison(s) from scoring")
    for key in score_keys:
        unscored = int(np.sum(performed[key] == 0))
        if unscored:
            logger.warning(f"{unscored} unit(s) have no valid comparison for '{key}'")
    return PairScoreSet(unit_ids=strata.unit_ids, keys=score_keys, wins=wins, performed=performed)


def order_effect_summary(comparisons: Iterable[PairComparison]) -> pd.DataFrame:
    """Presentation-order audit per score key.

    `first_share` is the share of valid verdicts choosing the unit shown first, with an exact
    binomial test against one half. When both presentations of a pair were asked,
    `consistent_share` is the share of such pairs whose two verdicts pick the same unit.
    """

    by_key: dict[str, list[PairComparison]] = {}
    for comparison in comparisons:
        by_key.setdefault(comparison.question, []).append(comparison)

    rows = []
    for key in sorted(by_key):
        valid = [c for c in by_key[key] if c.verdict is not Verdict.INVALID]
        first = sum(c.verdict is Verdict.FIRST for c in valid)
        winners: dict[frozenset[str], list[str]] = {}
        for c in valid:
            winners.setdefault(frozenset((c.unit_a, c.unit_b)), []).append(c.winner or "")
        both = [w for w in winners.values() if len(w) == 2]
        rows.append(
            {
                "question": key,
                "valid": len(valid),
                "invalid": len(by_key[key]) - len(valid),
                "first_share": first / len(valid) if valid else np.nan,
                "p_value": binomtest(first, len(valid), 0.5).pvalue if valid else np.nan,
                "consistent_share": (
                    sum(w[0] == w[1] for w in both) / len(both) if both else np.nan
                ),
            }
        )
    return pd.DataFrame(
        rows,
        columns=["question", "valid", "invalid", "first_share", "p_value", "consistent_share"],
    )
