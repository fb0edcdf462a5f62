"""Test fixtures for pairscore-rct."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pairscore_rct.config import PipelineSettings
from pairscore_rct.data import Experiment
from pairscore_rct.llm import QuestionSpec, SentenceTemplate
from pairscore_rct.llm.templates import PromptTemplate


@pytest.fixture()
def four_units() -> Experiment:
    """N=4, Z=(1,1,0,0), Y=(2,4,1,3), p=0.5."""
    return Experiment.from_arrays(z=[1, 1, 0, 0], y=[2.0, 4.0, 1.0, 3.0], p=0.5)


@pytest.fixture()
def make_experiment() -> Callable[..., Experiment]:
    """Random continuous experiment with `k` real covariates."""

    def build(n: int = 60, k: int = 3, p: float = 0.5, seed: int = 0) -> Experiment:
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n, k))
        z = np.zeros(n, dtype=int)
        z[rng.permutation(n)[: max(2, int(round(p * n)))]] = 1
        y = x @ np.linspace(1.0, 0.2, k) + 1.5 * z + rng.standard_normal(n)
        return Experiment.from_arrays(
            z=z,
            y=y,
            p=p,
            covariates={f"x{j + 1}": x[:, j].tolist() for j in range(k)},
            ids=[f"u{i:03d}" for i in range(n)],
        )

    return build


@pytest.fixture()
def outcome_question() -> QuestionSpec:
    return QuestionSpec(id="outcome", target_description="more likely to have a high outcome")


@pytest.fixture()
def pipeline_settings(tmp_path: Path, outcome_question: QuestionSpec) -> PipelineSettings:
    """A small synthetic experiment on disk plus mock-provider settings."""

    rng = np.random.default_rng(7)
    n = 60
    latent = rng.standard_normal(n)
    age = rng.integers(20, 70, size=n)
    z = np.zeros(n, dtype=int)
    z[rng.permutation(n)[: n // 2]] = 1
    y = 0.05 * age + latent + 1.0 * z + 0.5 * rng.standard_normal(n)
    frame = pd.DataFrame(
        {
            "id": [f"p{i:02d}" for i in range(n)],
            "treated": z,
            "score": np.round(y, 6),
            "age": age,
            "latent": np.round(latent, 6),
        }
    )
    data_path = tmp_path / "experiment.csv"
    frame.to_csv(data_path, index=False)

    return PipelineSettings(
        data_path=data_path,
        dataset={
            "id": "id",
            "treatment": "treated",
            "outcome": "score",
            "p": 0.5,
            "covariates": {"age": "integer", "latent": "real"},
        },
        out_dir=tmp_path / "run",
        seed=11,
        template=PromptTemplate(
            sentences={
                "age": SentenceTemplate(text="They are {value} years old."),
                "latent": SentenceTemplate(text="Their hidden score is {value}."),
            }
        ),
        questions=[outcome_question],
        provider={"kind": "mock", "mock": {"latent_column": "latent", "noise_scale": 0.5}},
        stratify={"basis": "oob_prediction_quantiles", "groups": {"n_groups": 3}},
        _env_file=None,
    )
