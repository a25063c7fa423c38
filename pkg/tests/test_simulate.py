"""Synthetic scenario generators: shapes, truth tables, and the coupling
structure each scenario promises."""

import numpy as np
import pytest

from tensormix.simulate import (
    TESTED_PAIRS,
    ScenarioConfig,
    generate,
    load_truth,
    save_truth,
)


class TestConfigValidation:
    def test_default_cluster_counts(self):
        assert ScenarioConfig(scenario=1).clusters == 2
        assert ScenarioConfig(scenario=2).clusters == 3

    def test_default_pair_match_is_per_scenario(self):
        assert ScenarioConfig(scenario=1).pair_match == pytest.approx(0.74)
        assert ScenarioConfig(scenario=2).pair_match == pytest.approx(0.92)
        assert ScenarioConfig(scenario=2,
                              pair_match=0.8).pair_match == pytest.approx(0.8)

    def test_bad_scenario(self):
        with pytest.raises(ValueError, match="scenario"):
            ScenarioConfig(scenario=3)

    def test_too_few_clusters(self):
        with pytest.raises(ValueError, match="clusters"):
            ScenarioConfig(scenario=1, clusters=1)

    def test_pair_match_range(self):
        with pytest.raises(ValueError, match="pair_match"):
            ScenarioConfig(scenario=1, pair_match=0.4)

    def test_pair_tilt_range(self):
        with pytest.raises(ValueError, match="pair_tilt"):
            ScenarioConfig(scenario=2, pair_tilt=0.5)

    def test_coupling_range(self):
        with pytest.raises(ValueError, match="coupling"):
            ScenarioConfig(scenario=2, coupling=0.0)

    def test_cluster_override_scales_parameters(self):
        cfg = ScenarioConfig(scenario=1, clusters=4)
        assert len(cfg.series_levels()) == 4
        assert cfg.cat1_table().shape == (4, 3)
        assert np.allclose(cfg.cat1_table().sum(axis=1), 1.0)
        assert cfg.real_means().shape == (4, cfg.real_dim)

    def test_truth_tables(self):
        truth1 = ScenarioConfig(scenario=1).truth_pairs()
        assert [(a, b) for a, b, _ in truth1] == list(TESTED_PAIRS)
        assert all(d for _, _, d in truth1)
        truth2 = ScenarioConfig(scenario=2).truth_pairs()
        assert [d for _, _, d in truth2] == [True, False, False, False]

    def test_to_dict_carries_derived_tables(self):
        d = ScenarioConfig(scenario=2, n=50).to_dict()
        assert d["n"] == 50
        assert len(d["series_levels"]) == 3
        assert np.allclose(np.sum(d["pair_table"], axis=1), 1.0)


class TestGeneratedData:
    def test_shapes_and_ranges(self):
        cfg = ScenarioConfig(scenario=1, n=200)
        dataset, labels, truth = generate(cfg, np.random.default_rng(0))
        assert dataset.n == 200
        assert [c.name for c in dataset.components] == ["T", "R", "C1", "C2", "C3"]
        assert dataset.values["T"].shape == (200, cfg.series_length)
        assert dataset.values["R"].shape == (200, cfg.real_dim)
        for name, width in (("C1", 3), ("C2", 4), ("C3", 4)):
            codes = dataset.values[name]
            assert codes.min() >= 0 and codes.max() < width
        assert set(labels) == {"T", "R", "C1", "pair"}
        assert len(truth) == len(TESTED_PAIRS)

    def test_determinism(self):
        cfg = ScenarioConfig(scenario=2, n=100)
        d1, l1, _ = generate(cfg, np.random.default_rng(42))
        d2, l2, _ = generate(cfg, np.random.default_rng(42))
        for name in d1.values:
            assert np.array_equal(d1.values[name], d2.values[name])
        for key in l1:
            assert np.array_equal(l1[key], l2[key])

    def test_series_reaches_cluster_levels(self):
        cfg = ScenarioConfig(scenario=2, n=2000)
        dataset, labels, _ = generate(cfg, np.random.default_rng(7))
        series = dataset.values["T"]
        for h, level in enumerate(cfg.series_levels()):
            sel = labels["T"] == h
            assert sel.sum() > 400
            assert series[sel, -1].mean() == pytest.approx(level, abs=0.2)

    def test_noisy_copy_rate_matches_coupling(self):
        cfg = ScenarioConfig(scenario=2, n=2000)
        _, labels, _ = generate(cfg, np.random.default_rng(7))
        assert (labels["R"] == labels["T"]).mean() == pytest.approx(
            cfg.coupling, abs=0.04)
        assert (labels["C1"] == labels["T"]).mean() == pytest.approx(
            cfg.coupling, abs=0.04)

    def test_paired_categoricals_agree_above_chance(self):
        for scenario, seed in ((1, 11), (2, 7)):
            cfg = ScenarioConfig(scenario=scenario, n=1500)
            dataset, _, _ = generate(cfg, np.random.default_rng(seed))
            agreement = (dataset.values["C2"] == dataset.values["C3"]).mean()
            expected = float(np.square(cfg.pair_table()).sum(axis=1).mean())
            assert agreement == pytest.approx(expected, abs=0.035)
            assert agreement > 0.27  # independence would give about 0.25

    def test_scenario_2_pair_block_is_independent_of_series(self):
        cfg = ScenarioConfig(scenario=2, n=2000)
        dataset, _, _ = generate(cfg, np.random.default_rng(7))
        tmean = dataset.values["T"].mean(axis=1)
        corr = np.corrcoef(dataset.values["C2"], tmean)[0, 1]
        assert abs(corr) < 0.08

    def test_scenario_1_couples_pair_block_to_series(self):
        cfg = ScenarioConfig(scenario=1, n=1500)
        dataset, _, _ = generate(cfg, np.random.default_rng(11))
        tmean = dataset.values["T"].mean(axis=1)
        corr = np.corrcoef(dataset.values["C2"], tmean)[0, 1]
        assert abs(corr) > 0.25


class TestTruthFile:
    def test_roundtrip(self, tmp_path):
        cfg = ScenarioConfig(scenario=2, n=40)
        dataset, labels, truth = generate(cfg, np.random.default_rng(3))
        path = tmp_path / "generator.json"
        save_truth(path, cfg, labels, truth)
        loaded = load_truth(path)
        assert loaded["config"]["scenario"] == 2
        assert loaded["config"]["n"] == 40
        assert loaded["labels"]["T"] == labels["T"].tolist()
        flags = {(d["component1"], d["component2"]): d["dependent"]
                 for d in loaded["dependence_truth"]}
        assert flags == {(a, b): d for a, b, d in truth}
