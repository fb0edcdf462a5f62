"""Enumeration of within-stratum comparison pairs."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..errors import DataValidationError
from .strata import StratumAssignment

MAX_SEED = 2**64


class Presentation(str, Enum):
    """Which unit of a planned pair is shown first."""

    A_FIRST = "a_first"
    B_FIRST = "b_first"


class PairingConfig(BaseModel):
    """Pair budget and audit options."""

    max_pairs_per_stratum: int | None = Field(default=None, ge=1)
    ordered: bool = False

    model_config = ConfigDict(extra="forbid")


@dataclass(frozen=True, slots=True)
class PlannedPair:
    unit_a: str
    unit_b: str
    stratum: str
    presentation: Presentation

    @property
    def shown(self) -> tuple[str, str]:
        """Unit ids in the order they appear in the prompt."""

        if self.presentation is Presentation.A_FIRST:
            return self.unit_a, self.unit_b
        return self.unit_b, self.unit_a


@dataclass(frozen=True)
class PairPlan:
    """Pairs to compare; every pair is asked once per question."""

    pairs: tuple[PlannedPair, ...]
    questions: tuple[str, ...]
    seed: int
    ordered: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def requests(self) -> Iterator[tuple[int, PlannedPair, str]]:
        """(pair index, pair, question id) in plan order."""

        for question in self.questions:
            for index, pair in enumerate(self.pairs):
                yield index, pair, question

    def unordered_pairs(self) -> set[frozenset[str]]:
        return {frozenset((pair.unit_a, pair.unit_b)) for pair in self.pairs}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "unit_a": pair.unit_a,
                    "unit_b": pair.unit_b,
                    "stratum": pair.stratum,
                    "presentation": pair.presentation.value,
                }
                for pair in self.pairs
            ],
            columns=["unit_a", "unit_b", "stratum", "presentation"],
        )

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def read_csv(
        cls, path: str | Path, *, questions: Sequence[str], seed: int, ordered: bool = False
    ) -> PairPlan:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        pairs = tuple(
            PlannedPair(
                unit_a=row.unit_a,
                unit_b=row.unit_b,
                stratum=row.stratum,
                presentation=Presentation(row.presentation),
            )
            for row in frame.itertuples(index=False)
        )
        return cls(pairs=pairs, questions=tuple(questions), seed=seed, ordered=ordered)


def plan_pairs(
    strata: StratumAssignment,
    questions: Sequence[str],
    seed: int,
    *,
    max_pairs_per_stratum: int | None = None,
    ordered: bool = False,
) -> PairPlan:
    """All within-stratum unordered pairs, shuffled, with a random presentation coin.

    Draw order from the seeded generator: per-stratum caps, then the global shuffle, then the
    presentation coins. In `ordered` mode every unordered pair is planned in both presentations.
    """

    if not 0 <= seed < MAX_SEED:
        raise DataValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if not questions:
        raise DataValidationError("at least one question is required")
    if len(set(questions)) != len(questions):
        raise DataValidationError("question ids must be unique")

    rng = np.random.default_rng(seed)
    candidates: list[tuple[str, str, str]] = []
    for stratum, members in strata.members().items():
        if len(members) < 2:
            only = strata.unit_ids[members[0]]
            logger.warning(f"Skipping singleton stratum '{stratum}' (unit {only})")
            continue
        pairs = [
            (strata.unit_ids[i], strata.unit_ids[j], stratum) for i, j in combinations(members, 2)
        ]
        if max_pairs_per_stratum is not None and len(pairs) > max_pairs_per_stratum:
            keep = np.sort(rng.choice(len(pairs), size=max_pairs_per_stratum, replace=False))
            logger.debug(
                f"Stratum '{stratum}': sampled {max_pairs_per_stratum} of "
                f"{comb(len(members), 2)} pairs"
            )
            pairs = [pairs[int(k)] for k in keep]
        candidates.extend(pairs)

    planned: list[PlannedPair]
    if ordered:
        planned = [
            PlannedPair(a, b, stratum, presentation)
            for a, b, stratum in candidates
            for presentation in (Presentation.A_FIRST, Presentation.B_FIRST)
        ]
        planned = [planned[int(i)] for i in rng.permutation(len(planned))]
    else:
        order = rng.permutation(len(candidates))
        coins = rng.integers(0, 2, size=len(candidates))
        planned = [
            PlannedPair(
                *candidates[int(index)],
                Presentation.B_FIRST if coin else Presentation.A_FIRST,
            )
            for index, coin in zip(order, coins, strict=True)
        ]

    logger.info(
        f"Planned {len(planned)} pairs across {len(strata.labels())} strata "
        f"for {len(questions)} question(s)"
    )
    return PairPlan(pairs=tuple(planned), questions=tuple(questions), seed=seed, ordered=ordered)
