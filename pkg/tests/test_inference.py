"""Posterior summaries: predictive density, conditional prediction,
dependence decisions, and diagnostics, all on hand-crafted draw sets."""

import math

import numpy as np
import pytest

from tensormix.data import ComponentSchema, MixedDataset
from tensormix.inference import (
    DrawFormatError,
    PosteriorDraws,
    cluster_count_trace,
    coclustering,
    concentration_trace,
    conditional_predict,
    dependence_report,
    dependence_statistic,
    dependence_test,
    point_predictions,
    predictive_density,
)
from tensormix.kernels import CategoricalKernel, GaussianDiagKernel

NEARLY_ONE = 1.0 - 1e-9
TINY = 1e-9


def make_header(model, components, families):
    return {
        "model": model,
        "components": [c.to_dict() for c in components],
        "kernels": [f.to_dict() for f in families],
        "alpha_prior": {"shape": 1.0, "rate": 1.0},
        "beta_prior": {"shape": 1.0, "rate": 1.0},
    }


def one_categorical_header():
    comp = ComponentSchema("A", "categorical", levels=("l0", "l1"))
    return make_header("itf", [comp], [CategoricalKernel(2)]), comp


def one_categorical_draws(lam, psi, probs, n_records=1):
    header, _ = one_categorical_header()
    record = {
        "alpha": 1.0,
        "beta": [1.0],
        "lambda": list(lam),
        "psi": [psi],
        "atoms": [[{"probs": list(p)} for p in probs]],
        "c0": [0],
        "c": [[0]],
    }
    return PosteriorDraws(header, [record] * n_records)


class TestPredictiveDensity:
    def test_hand_mixture_value(self):
        # cell mass: 0.6*(0.7*0.9 + 0.3*0.3) + 0.4*(0.2*0.9 + 0.8*0.3)
        #          = 0.6*0.72 + 0.4*0.42 = 0.600 at level 0, 0.400 at level 1
        draws = one_categorical_draws(
            lam=[0.6, 0.4],
            psi=[[0.7, 0.3], [0.2, 0.8]],
            probs=[[0.9, 0.1], [0.3, 0.7]],
        )
        comp = ComponentSchema("A", "categorical", levels=("l0", "l1"))
        dataset = MixedDataset([comp], {"A": np.array([0, 1])})
        dens = predictive_density(draws, dataset)
        assert dens[0] == pytest.approx(0.600, abs=1e-3)
        assert dens[1] == pytest.approx(0.400, abs=1e-3)

    def test_tail_extension_recovers_full_mass(self):
        # Stored sticks cover only half the top mass and 0.8 per row; the
        # evaluation must extend both levels until the categorical predictive
        # sums to one within the tolerance.
        draws = one_categorical_draws(
            lam=[0.5],
            psi=[[0.6, 0.2]],
            probs=[[0.9, 0.1], [0.3, 0.7]],
        )
        comp = ComponentSchema("A", "categorical", levels=("l0", "l1"))
        dataset = MixedDataset([comp], {"A": np.array([0, 1])})
        dens = predictive_density(draws, dataset)
        assert dens.sum() == pytest.approx(1.0, abs=1e-3)
        assert dens.sum() <= 1.0 + 1e-9

    def test_hidden_rows_marginalize_to_one(self):
        draws = one_categorical_draws(
            lam=[0.6, 0.4],
            psi=[[0.7, 0.3], [0.2, 0.8]],
            probs=[[0.9, 0.1], [0.3, 0.7]],
        )
        comp = ComponentSchema("A", "categorical", levels=("l0", "l1"))
        dataset = MixedDataset(
            [comp], {"A": np.array([-1])}, {"A": np.array([False])}
        )
        dens = predictive_density(draws, dataset)
        assert dens[0] == pytest.approx(1.0, abs=1e-3)


def bayes_toy_draws(second_kind="categorical"):
    """Two components tied one-to-one to two equally weighted top clusters."""
    comp_a = ComponentSchema("A", "categorical", levels=("l0", "l1"))
    identity = [[NEARLY_ONE, TINY], [TINY, NEARLY_ONE]]
    if second_kind == "categorical":
        comp_b = ComponentSchema("B", "categorical", levels=("l0", "l1"))
        fam_b = CategoricalKernel(2)
        atoms_b = [{"probs": [0.8, 0.2]}, {"probs": [0.4, 0.6]}]
    else:
        comp_b = ComponentSchema("B", "real", dim=1)
        fam_b = GaussianDiagKernel(1)
        atoms_b = [{"mean": [-1.0], "var": [1.0]}, {"mean": [2.0], "var": [1.0]}]
    header = make_header("itf", [comp_a, comp_b],
                         [CategoricalKernel(2), fam_b])
    record = {
        "alpha": 1.0,
        "beta": [1.0, 1.0],
        "lambda": [0.5, 0.5],
        "psi": [identity, identity],
        "atoms": [[{"probs": [0.9, 0.1]}, {"probs": [0.2, 0.8]}], atoms_b],
        "c0": [0],
        "c": [[0, 0]],
    }
    draws = PosteriorDraws(header, [record])
    if second_kind == "categorical":
        values = {"A": np.array([0]), "B": np.array([-1])}
    else:
        values = {"A": np.array([0]), "B": np.array([[math.nan]])}
    observed = {"A": np.array([True]), "B": np.array([False])}
    dataset = MixedDataset([comp_a, comp_b], values, observed)
    return draws, dataset


class TestConditionalPrediction:
    def test_two_cluster_posterior_weights(self):
        # Observing A = l0 weights the clusters 0.5*0.9 : 0.5*0.2 = 9 : 2,
        # so the predictive law of B is (9/11)*(0.8,0.2) + (2/11)*(0.4,0.6).
        draws, dataset = bayes_toy_draws("categorical")
        rows, mat = conditional_predict(draws, dataset, "B")
        assert rows.tolist() == [0]
        assert mat[0, 0] == pytest.approx(8.0 / 11.0, abs=1e-3)
        assert mat[0, 1] == pytest.approx(3.0 / 11.0, abs=1e-3)

    def test_numeric_posterior_mean(self):
        draws, dataset = bayes_toy_draws("real")
        rows, mat = conditional_predict(draws, dataset, "B")
        assert mat[0, 0] == pytest.approx(-5.0 / 11.0, abs=1e-3)

    def test_point_prediction_labels(self):
        draws, dataset = bayes_toy_draws("categorical")
        preds = point_predictions(draws, dataset, "B", rows=[0])
        assert preds == {0: "l0"}

    def test_point_prediction_numeric_vector(self):
        draws, dataset = bayes_toy_draws("real")
        preds = point_predictions(draws, dataset, "B", rows=[0])
        assert preds[0][0] == pytest.approx(-5.0 / 11.0, abs=1e-3)

    def test_unknown_component(self):
        draws, dataset = bayes_toy_draws("categorical")
        with pytest.raises(KeyError):
            conditional_predict(draws, dataset, "nope")


def pair_header():
    comps = [
        ComponentSchema("A", "categorical", levels=("l0", "l1", "l2")),
        ComponentSchema("B", "categorical", levels=("l0", "l1", "l2")),
    ]
    fams = [CategoricalKernel(3), CategoricalKernel(3)]
    return make_header("itf", comps, fams)


def pair_draws(lam, psi_a, psi_b, n_records=1, model="itf"):
    header = pair_header()
    header["model"] = model
    record = {
        "alpha": 1.0,
        "beta": [1.0, 1.0],
        "lambda": list(lam),
        "psi": [] if model == "dpm" else [psi_a, psi_b],
        "atoms": [[{"probs": [0.9, 0.05, 0.05]}] * 3] * 2,
        "c0": [0, 1, 2],
        "c": [[0, 0], [1, 1], [2, 2]],
    }
    return PosteriorDraws(header, [record] * n_records)


SOFT_A = [[0.90, 0.05, 0.05], [0.05, 0.90, 0.05], [0.05, 0.05, 0.90]]
SOFT_B = [[0.80, 0.15, 0.05], [0.10, 0.80, 0.10], [0.30, 0.30, 0.40]]


class TestDependence:
    def test_single_top_level_gives_zero(self):
        draws = pair_draws([1.0], [[0.5, 0.3, 0.2]], [[0.4, 0.4, 0.2]])
        stat = dependence_statistic(draws, "A", "B")
        assert abs(stat[0]) < 1e-10

    def test_identical_rows_give_zero(self):
        row = [0.3, 0.4, 0.3]
        draws = pair_draws([0.5, 0.3, 0.2], SOFT_A, [row, row, row])
        stat = dependence_statistic(draws, "A", "B")
        assert abs(stat[0]) < 1e-10

    def test_diagonal_coupling_is_log_two(self):
        identity = [[NEARLY_ONE, TINY, TINY], [TINY, NEARLY_ONE, TINY]]
        draws = pair_draws([0.5, 0.5], identity, identity)
        stat = dependence_statistic(draws, "A", "B")
        assert stat[0] == pytest.approx(math.log(2.0), abs=1e-6)

    def test_statistic_is_symmetric(self):
        draws = pair_draws([0.6, 0.3, 0.1], SOFT_A, SOFT_B)
        ab = dependence_statistic(draws, "A", "B")
        ba = dependence_statistic(draws, "B", "A")
        assert np.allclose(ab, ba, atol=1e-12)

    def test_permutation_flags_coupled_rows(self):
        draws = pair_draws([0.6, 0.3, 0.1], SOFT_A, SOFT_B, n_records=60)
        res = dependence_test(draws, "A", "B", permutations=200)
        assert res["dependent"] is True
        assert res["structural"] is False
        assert res["statistic"] > res["null95"]
        assert res["pvalue"] <= 0.05

    def test_permutation_clears_independent_rows(self):
        row = [0.3, 0.4, 0.3]
        draws = pair_draws([0.5, 0.3, 0.2], SOFT_A, [row, row, row],
                           n_records=60)
        res = dependence_test(draws, "A", "B", permutations=200)
        assert res["dependent"] is False
        assert res["pvalue"] == pytest.approx(1.0)

    def test_pvalue_bounds(self):
        draws = pair_draws([0.6, 0.3, 0.1], SOFT_A, SOFT_B, n_records=60)
        res = dependence_test(draws, "A", "B", permutations=200)
        assert 1.0 / 201.0 <= res["pvalue"] <= 1.0

    def test_single_index_model_is_structural(self):
        draws = pair_draws([0.5, 0.5], None, None, model="dpm")
        res = dependence_test(draws, "A", "B")
        assert res["structural"] is True
        assert res["dependent"] is True
        assert res["null95"] is None and res["pvalue"] is None
        assert res["statistic"] == pytest.approx(math.log(2.0), abs=1e-6)

    def test_report_covers_all_pairs(self):
        draws = pair_draws([0.6, 0.3, 0.1], SOFT_A, SOFT_B, n_records=10)
        report = dependence_report(draws, permutations=50)
        assert len(report) == 1
        assert {report[0]["component1"], report[0]["component2"]} == {"A", "B"}


class TestDiagnostics:
    def two_sweep_draws(self):
        header = pair_header()
        base = {
            "alpha": 1.0, "beta": [1.0, 1.0],
            "lambda": [0.5, 0.5], "psi": [SOFT_A[:2], SOFT_B[:2]],
            "atoms": [[{"probs": [0.9, 0.05, 0.05]}] * 3] * 2,
        }
        r1 = dict(base, alpha=1.0, c0=[0, 0, 1], c=[[0, 0], [0, 1], [1, 1]])
        r2 = dict(base, alpha=2.0, c0=[0, 1, 1], c=[[0, 1], [1, 1], [1, 0]])
        return PosteriorDraws(header, [r1, r2])

    def test_coclustering_hand_values(self):
        draws = self.two_sweep_draws()
        mat = coclustering(draws)
        expected = np.array([
            [1.0, 0.5, 0.0],
            [0.5, 1.0, 0.5],
            [0.0, 0.5, 1.0],
        ])
        assert np.allclose(mat, expected)
        mat_a = coclustering(draws, component="A")
        assert np.allclose(mat_a, expected)
        assert np.allclose(mat_a, mat_a.T)

    def test_cluster_count_trace(self):
        draws = self.two_sweep_draws()
        assert cluster_count_trace(draws).tolist() == [2, 2]
        assert cluster_count_trace(draws, component="A").tolist() == [2, 2]

    def test_concentration_trace(self):
        draws = self.two_sweep_draws()
        alpha, beta = concentration_trace(draws)
        assert alpha.tolist() == [1.0, 2.0]
        assert beta.shape == (2, 2)

    def test_dpm_trace_has_no_lower_concentrations(self):
        draws = pair_draws([0.5, 0.5], None, None, model="dpm", n_records=3)
        alpha, beta = concentration_trace(draws)
        assert beta is None
        assert alpha.shape == (3,)


class TestDrawBookkeeping:
    def test_empty_stream_is_an_error(self):
        header = pair_header()
        with pytest.raises(DrawFormatError):
            PosteriorDraws(header, [])

    def test_component_index_error(self):
        draws = pair_draws([0.5, 0.5], SOFT_A[:2], SOFT_B[:2])
        with pytest.raises(KeyError):
            draws.component_index("missing")

    def test_subsample_is_deterministic_and_ordered(self):
        draws = pair_draws([0.5, 0.5], SOFT_A[:2], SOFT_B[:2], n_records=10)
        sub1 = draws.subsample(4)
        sub2 = draws.subsample(4)
        assert len(sub1) == 4
        assert [id(d) for d in sub1] == [id(d) for d in sub2]
        assert draws.subsample(None) is draws.draws
        assert draws.subsample(50) is draws.draws
