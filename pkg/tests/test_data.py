"""Dataset container, disk format, holdout masking and scoring."""

import json
import math

import numpy as np
import pytest

from tensormix.data import (
    ComponentSchema,
    DatasetFormatError,
    MixedDataset,
    apply_holdout,
    kernels_for_dataset,
    load_answers,
    load_dataset,
    save_answers,
    save_dataset,
    score_predictions,
)
from tensormix.kernels import Ar1Kernel, CategoricalKernel, GaussianDiagKernel


def example_dataset():
    comps = [
        ComponentSchema("pos", "real", dim=2),
        ComponentSchema("color", "categorical", levels=("red", "green", "blue")),
        ComponentSchema("trace", "series", length=4),
    ]
    rng = np.random.default_rng(3)
    values = {
        "pos": rng.standard_normal((6, 2)),
        "color": np.array([0, 2, 1, 1, 0, 2]),
        "trace": rng.standard_normal((6, 4)),
    }
    observed = {
        "pos": np.array([True, True, False, True, True, True]),
        "color": np.array([True, False, True, True, True, True]),
        "trace": np.ones(6, dtype=bool),
    }
    values["pos"][2] = math.nan
    values["color"][1] = -1
    return MixedDataset(comps, values, observed, name="example")


class TestComponentSchema:
    def test_unknown_kind(self):
        with pytest.raises(DatasetFormatError):
            ComponentSchema("x", "wavelet")

    def test_real_needs_dim(self):
        with pytest.raises(DatasetFormatError):
            ComponentSchema("x", "real", dim=0)

    def test_series_needs_length(self):
        with pytest.raises(DatasetFormatError):
            ComponentSchema("x", "series", length=1)

    def test_categorical_needs_levels(self):
        with pytest.raises(DatasetFormatError):
            ComponentSchema("x", "categorical", levels=("only",))

    def test_width_and_columns(self):
        assert ComponentSchema("x", "real", dim=3).width == 3
        assert ComponentSchema("x", "series", length=5).width == 5
        assert ComponentSchema("x", "categorical", levels=("a", "b")).width == 1
        assert ComponentSchema("x", "real", dim=2).column_names() == ["x1", "x2"]
        assert ComponentSchema("x", "series", length=2).column_names() == ["t1", "t2"]
        assert ComponentSchema("x", "categorical", levels=("a", "b")).column_names() == ["value"]

    def test_dict_round_trip(self):
        for schema in [
            ComponentSchema("a", "real", dim=2),
            ComponentSchema("b", "categorical", levels=("x", "y")),
            ComponentSchema("c", "series", length=3),
        ]:
            assert ComponentSchema.from_dict(schema.to_dict()) == schema


class TestMixedDataset:
    def test_basic_shapes(self):
        ds = example_dataset()
        assert ds.n == 6
        assert ds.component_names == ["pos", "color", "trace"]
        assert ds.values["pos"].shape == (6, 2)
        assert ds.values["color"].shape == (6,)

    def test_duplicate_names(self):
        comp = ComponentSchema("x", "real", dim=1)
        with pytest.raises(DatasetFormatError):
            MixedDataset([comp, comp], {"x": np.zeros((3, 1))})

    def test_row_count_mismatch(self):
        comps = [ComponentSchema("a", "real", dim=1), ComponentSchema("b", "real", dim=1)]
        with pytest.raises(DatasetFormatError):
            MixedDataset(comps, {"a": np.zeros((3, 1)), "b": np.zeros((4, 1))})

    def test_out_of_range_code(self):
        comp = ComponentSchema("c", "categorical", levels=("a", "b"))
        with pytest.raises(DatasetFormatError):
            MixedDataset([comp], {"c": np.array([0, 2])})

    def test_non_finite_observed_value(self):
        comp = ComponentSchema("x", "real", dim=1)
        with pytest.raises(DatasetFormatError):
            MixedDataset([comp], {"x": np.array([[1.0], [math.inf]])})

    def test_hidden_cells_tolerate_poison(self):
        ds = example_dataset()
        assert not ds.observed["pos"][2]
        assert math.isnan(ds.values["pos"][2, 0])
        assert ds.values["color"][1] == -1

    def test_schema_lookup(self):
        ds = example_dataset()
        assert ds.schema("color").kind == "categorical"
        with pytest.raises(KeyError):
            ds.schema("nope")

    def test_copy_is_independent(self):
        ds = example_dataset()
        cp = ds.copy()
        cp.values["color"][0] = 1
        cp.observed["pos"][0] = False
        assert ds.values["color"][0] == 0
        assert ds.observed["pos"][0]

    def test_take_keeps_order(self):
        ds = example_dataset()
        sub = ds.take([4, 0])
        assert sub.n == 2
        assert sub.values["color"].tolist() == [0, 0]
        assert np.allclose(sub.values["pos"][1], ds.values["pos"][0])


class TestDiskRoundTrip:
    def test_round_trip_bitwise(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path / "d")
        back = load_dataset(tmp_path / "d")
        assert back.name == "example"
        assert back.n == ds.n
        for comp in ds.components:
            obs = ds.observed[comp.name]
            assert np.array_equal(back.observed[comp.name], obs)
            got, want = back.values[comp.name], ds.values[comp.name]
            if comp.kind == "categorical":
                assert np.array_equal(got[obs], want[obs])
                assert np.all(got[~obs] == -1)
            else:
                assert np.array_equal(got[obs], want[obs])  # repr round-trips exactly
                assert np.all(np.isnan(got[~obs]))

    def test_missing_schema(self, tmp_path):
        with pytest.raises(DatasetFormatError, match="schema.json"):
            load_dataset(tmp_path)

    def test_invalid_json(self, tmp_path):
        (tmp_path / "schema.json").write_text("{nope")
        with pytest.raises(DatasetFormatError, match="not valid JSON"):
            load_dataset(tmp_path)

    def test_no_components(self, tmp_path):
        (tmp_path / "schema.json").write_text(json.dumps({"components": []}))
        with pytest.raises(DatasetFormatError, match="no components"):
            load_dataset(tmp_path)

    def test_missing_csv(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "pos.csv").unlink()
        with pytest.raises(DatasetFormatError, match="missing data file"):
            load_dataset(tmp_path)

    def test_empty_csv(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "color.csv").write_text("")
        with pytest.raises(DatasetFormatError, match="empty file"):
            load_dataset(tmp_path)

    def test_header_width_mismatch(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "pos.csv").write_text("x1\n1.0\n")
        with pytest.raises(DatasetFormatError, match="header"):
            load_dataset(tmp_path)

    def test_row_field_count(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "pos.csv").write_text("x1,x2\n1.0\n")
        with pytest.raises(DatasetFormatError, match="row 2"):
            load_dataset(tmp_path)

    def test_unknown_level_names_location(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "color.csv").write_text("value\nred\npurple\n" + "red\n" * 4)
        with pytest.raises(DatasetFormatError, match=r"row 3.*'purple'"):
            load_dataset(tmp_path)

    def test_non_number_names_location(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        (tmp_path / "pos.csv").write_text("x1,x2\n" + "1.0,oops\n" + "0.0,0.0\n" * 5)
        with pytest.raises(DatasetFormatError, match="column 2.*not a number"):
            load_dataset(tmp_path)

    def test_n_mismatch(self, tmp_path):
        ds = example_dataset()
        save_dataset(ds, tmp_path)
        schema = json.loads((tmp_path / "schema.json").read_text())
        schema["n"] = 99
        (tmp_path / "schema.json").write_text(json.dumps(schema))
        with pytest.raises(DatasetFormatError, match="n=99"):
            load_dataset(tmp_path)


class TestHoldout:
    def test_masks_and_answers(self):
        ds = example_dataset()
        rng = np.random.default_rng(1)
        masked, answers = apply_holdout(ds, {"color": 2, "pos": 1}, rng)
        assert len(answers["color"]) == 2
        assert len(answers["pos"]) == 1
        for i, label in answers["color"].items():
            assert not masked.observed["color"][i]
            assert masked.values["color"][i] == -1
            assert label == ds.schema("color").levels[ds.values["color"][i]]
        for i, vals in answers["pos"].items():
            assert not masked.observed["pos"][i]
            assert np.all(np.isnan(masked.values["pos"][i]))
            assert np.allclose(vals, ds.values["pos"][i])
        # the source dataset is untouched
        assert ds.observed["color"].sum() == 5

    def test_only_observed_cells_are_eligible(self):
        ds = example_dataset()
        rng = np.random.default_rng(2)
        masked, answers = apply_holdout(ds, {"color": 5}, rng)
        assert set(answers["color"]) == {0, 2, 3, 4, 5}
        assert masked.observed["color"].sum() == 0

    def test_too_many_raises(self):
        ds = example_dataset()
        with pytest.raises(ValueError):
            apply_holdout(ds, {"color": 6}, np.random.default_rng(0))

    def test_deterministic_under_seed(self):
        ds = example_dataset()
        _, a1 = apply_holdout(ds, {"trace": 3}, np.random.default_rng(5))
        _, a2 = apply_holdout(ds, {"trace": 3}, np.random.default_rng(5))
        assert a1 == a2

    def test_answers_round_trip(self, tmp_path):
        ds = example_dataset()
        _, answers = apply_holdout(ds, {"color": 2, "pos": 1}, np.random.default_rng(1))
        save_answers(answers, tmp_path / "answers.json")
        back = load_answers(tmp_path / "answers.json")
        assert back == answers


class TestScoring:
    def test_categorical_percent(self):
        answers = {0: "a", 1: "b", 2: "a", 3: "c"}
        preds = {0: "a", 1: "a", 2: "a", 3: "b"}
        assert score_predictions(answers, preds, "categorical") == pytest.approx(50.0)

    def test_numeric_perfect_is_zero(self):
        answers = {0: [1.0, 2.0], 1: [3.0, 4.0]}
        assert score_predictions(answers, dict(answers), "real") == 0.0

    def test_numeric_mean_prediction_scores_one(self):
        answers = {0: [1.0], 1: [3.0], 2: [5.0]}
        preds = {i: [3.0] for i in answers}
        assert score_predictions(answers, preds, "real") == pytest.approx(1.0)

    def test_constant_truth_edge(self):
        answers = {0: [2.0], 1: [2.0]}
        assert score_predictions(answers, dict(answers), "real") == 0.0
        assert score_predictions(answers, {0: [2.0], 1: [3.0]}, "real") == math.inf

    def test_key_mismatch(self):
        with pytest.raises(ValueError):
            score_predictions({0: "a"}, {1: "a"}, "categorical")

    def test_empty(self):
        with pytest.raises(ValueError):
            score_predictions({}, {}, "categorical")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            score_predictions({0: [1.0, 2.0]}, {0: [1.0]}, "real")


class TestDefaultKernels:
    def test_families_match_kinds(self):
        ds = example_dataset()
        fams = kernels_for_dataset(ds)
        assert isinstance(fams[0], GaussianDiagKernel) and fams[0].dim == 2
        assert isinstance(fams[1], CategoricalKernel) and fams[1].n_levels == 3
        assert isinstance(fams[2], Ar1Kernel) and fams[2].length == 4
