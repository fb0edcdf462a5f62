"""Tests for experiment loading and covariate encoding."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from pairscore_rct.data import (
    CovariateKind,
    Experiment,
    SchemaConfig,
    append_columns,
    encode_covariates,
    load_experiment,
)
from pairscore_rct.errors import DataValidationError


def _write(path: Path, text: str) -> Path:
    path.write_text(text.strip() + "\n", encoding="utf-8")
    return path


def test_load_four_row_file(tmp_path: Path) -> None:
    path = _write(tmp_path / "rct.csv", "id,z,y\na,1,2\nb,1,4\nc,0,1\nd,0,3")
    schema = SchemaConfig(id="id", treatment="z", outcome="y", p=0.5)

    experiment = load_experiment(path, schema)

    assert (experiment.n, experiment.n_t, experiment.n_c) == (4, 2, 2)
    assert experiment.ids == ("a", "b", "c", "d")
    np.testing.assert_array_equal(experiment.y, [2.0, 4.0, 1.0, 3.0])
    assert experiment.constant_p() == 0.5


def test_empty_cell_is_missing_and_gets_indicator(tmp_path: Path) -> None:
    path = _write(tmp_path / "rct.csv", "id,z,y,age\na,1,2,30\nb,0,1,\nc,1,3,41\nd,0,2,25")
    schema = SchemaConfig(
        id="id", treatment="z", outcome="y", p=0.5, covariates={"age": CovariateKind.INTEGER}
    )

    experiment = load_experiment(path, schema)
    encoded = encode_covariates(experiment)

    assert experiment.units[1].is_missing("age")
    assert encoded.column_names == ("age", "age_missing")
    np.testing.assert_array_equal(encoded.column("age"), [30.0, 0.0, 41.0, 25.0])
    np.testing.assert_array_equal(encoded.column("age_missing"), [0.0, 1.0, 0.0, 0.0])


def test_per_stratum_probability_column(tmp_path: Path) -> None:
    rows = ["id,z,y,journal,p"]
    rows += [f"s{i},{i % 2},{i},Science,0.122" for i in range(4)]
    rows += [f"g{i},{i % 2},{i},Genetics,0.5" for i in range(4)]
    path = _write(tmp_path / "rct.csv", "\n".join(rows))
    schema = SchemaConfig(
        id="id", treatment="z", outcome="y", p_column="p", stratum_column="journal"
    )

    experiment = load_experiment(path, schema)
    science = experiment.by_stratum()["Science"]

    assert science.constant_p() == pytest.approx(0.122)
    assert experiment.by_stratum()["Genetics"].constant_p() == 0.5


def test_load_rejects_bad_rows(tmp_path: Path) -> None:
    schema = SchemaConfig(id="id", treatment="z", outcome="y", p=0.5)
    bad_z = _write(tmp_path / "z.csv", "id,z,y\na,2,1\nb,0,1")
    missing_y = _write(tmp_path / "y.csv", "id,z,y\na,1,\nb,0,1")
    duplicate = _write(tmp_path / "d.csv", "id,z,y\na,1,1\na,0,1")
    no_column = _write(tmp_path / "c.csv", "id,z\na,1\nb,0")

    for path in (bad_z, missing_y, duplicate, no_column):
        with pytest.raises(DataValidationError):
            load_experiment(path, schema)
    with pytest.raises(DataValidationError):
        load_experiment(tmp_path / "absent.csv", schema)


def test_load_rejects_stratum_without_both_arms(tmp_path: Path) -> None:
    rows = ["id,z,y,journal"]
    rows += [f"s{i},{i % 2},{i},Science" for i in range(4)]
    rows += [f"g{i},1,{i},Genetics" for i in range(3)]
    path = _write(tmp_path / "rct.csv", "\n".join(rows))
    stratified = SchemaConfig(
        id="id", treatment="z", outcome="y", p=0.5, stratum_column="journal"
    )
    with pytest.raises(DataValidationError, match="stratum 'Genetics' has no control units"):
        load_experiment(path, stratified)

    treated_only = _write(tmp_path / "t.csv", "id,z,y\na,1,1\nb,1,2")
    with pytest.raises(DataValidationError, match="no control units"):
        load_experiment(treated_only, SchemaConfig(id="id", treatment="z", outcome="y", p=0.5))


def test_schema_requires_exactly_one_probability_source() -> None:
    with pytest.raises(ValueError):
        SchemaConfig(id="id", treatment="z", outcome="y")
    with pytest.raises(ValueError):
        SchemaConfig(id="id", treatment="z", outcome="y", p=0.5, p_column="p")


def test_experiment_rejects_invalid_arrays() -> None:
    with pytest.raises(DataValidationError):
        Experiment.from_arrays(z=[1, 2], y=[1.0, 2.0], p=0.5)
    with pytest.raises(DataValidationError):
        Experiment.from_arrays(z=[1, 0], y=[1.0, np.nan], p=0.5)
    with pytest.raises(DataValidationError):
        Experiment.from_arrays(z=[1, 0], y=[1.0, 2.0], p=1.0)


def test_categorical_encoding_drops_reference_level() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0, 1, 0], y=[1.0, 2.0, 3.0, 4.0], p=0.5, covariates={"sex": ["M", "F", "F", "M"]}
    )
    encoded = encode_covariates(experiment)
    assert encoded.column_names == ("sex_F",)
    np.testing.assert_array_equal(encoded.column("sex_F"), [0.0, 1.0, 1.0, 0.0])


def test_missing_categorical_as_level() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0, 1, 0],
        y=[1.0, 2.0, 3.0, 4.0],
        p=0.5,
        covariates={"journal": ["Science", None, "Genetics", "Science"]},
    )
    assert encode_covariates(experiment).column_names == ("journal_Genetics", "journal_missing")
    assert encode_covariates(experiment, missing_as_level=True).column_names == (
        "journal_Genetics",
        "journal_unknown",
    )


def test_two_units_missing_age() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0], y=[1.0, 2.0], p=0.5, covariates={"age": [30, None]}
    )
    encoded = encode_covariates(experiment)
    np.testing.assert_array_equal(encoded.matrix, [[30.0, 0.0], [0.0, 1.0]])


def test_all_missing_columns_raise_unless_dropped() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0, 1, 0],
        y=[1.0, 2.0, 3.0, 4.0],
        p=0.5,
        covariates={"age": [30, 41, 25, 52], "impact": [None, None, None, None]},
        covariate_kinds={"age": CovariateKind.INTEGER, "impact": CovariateKind.REAL},
    )
    extras = {"score": [None, None, None, None]}
    with pytest.raises(DataValidationError, match="impact"):
        encode_covariates(experiment)
    with pytest.raises(DataValidationError, match="score"):
        append_columns(encode_covariates(experiment, drop_all_missing=True), extras)

    encoded = encode_covariates(experiment, extras, drop_all_missing=True)
    assert encoded.column_names == ("age",)


def test_pair_score_extra_adds_one_column() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0, 1, 0], y=[1.0, 2.0, 3.0, 4.0], p=0.5, covariates={"sex": ["M", "F", "F", "M"]}
    )
    encoded = encode_covariates(experiment, {"pair_score": [0.25, 0.5, 1.0, 0.0]})
    assert encoded.column_names == ("sex_F", "pair_score")
    assert encoded.n_base == 1
    assert encoded.extra_names == ("pair_score",)


def test_extras_keep_zero_columns_and_flag_missing() -> None:
    experiment = Experiment.from_arrays(z=[1, 0, 1, 0], y=[1.0, 2.0, 3.0, 4.0], p=0.5)
    encoded = encode_covariates(
        experiment, {"zeros": [0.0, 0.0, 0.0, 0.0], "score": [0.5, None, 1.0, np.nan]}
    )
    assert encoded.column_names == ("zeros", "score", "score_missing")
    np.testing.assert_array_equal(encoded.column("score_missing"), [0.0, 1.0, 0.0, 1.0])


def test_encoding_is_deterministic(make_experiment) -> None:
    experiment = make_experiment(n=20, k=4)
    first = encode_covariates(experiment, {"extra": np.arange(20.0)})
    second = encode_covariates(experiment, {"extra": np.arange(20.0)})
    assert first.column_names == second.column_names
    assert np.array_equal(first.matrix, second.matrix)


def test_encoding_errors() -> None:
    experiment = Experiment.from_arrays(
        z=[1, 0, 1],
        y=[1.0, 2.0, 3.0],
        p=0.5,
        covariates={"age": [None, None, None]},
        covariate_kinds={"age": CovariateKind.REAL},
    )
    with pytest.raises(DataValidationError):
        encode_covariates(experiment)

    complete = Experiment.from_arrays(z=[1, 0, 1], y=[1.0, 2.0, 3.0], p=0.5)
    base = encode_covariates(complete)
    with pytest.raises(DataValidationError):
        append_columns(base, {"short": [1.0, 2.0]})
    with pytest.raises(DataValidationError):
        append_columns(base, {"empty": [None, None, None]})
