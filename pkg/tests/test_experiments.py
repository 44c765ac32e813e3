import json

import numpy as np
import pytest
from scipy import stats

from bayes.hyperparams import HyperParams, synthetic_mu
from experiments import (
    DEFAULT_TRUE_MODEL_INDEX,
    SWEEP_G_VALUES,
    ExperimentConfig,
    ExperimentHarness,
    load_config,
    resolve_mu,
    risk_table,
)
from store.results import read_results_csv, serialize_model
from store.signals import write_signal
from tree.prior import BranchProbabilities
from tree.quadtree import enumerate_models
from utils.errors import DomainError, ParseError
from utils.run_logger import RunLogger


def _harness(tmp_path, **settings) -> ExperimentHarness:
    settings.setdefault("output_dir", str(tmp_path / "results"))
    return ExperimentHarness(ExperimentConfig(**settings), verbose=False)


class TestExperimentConfig:

    def test_defaults(self):
        cfg = ExperimentConfig.experiment1(seed=1)
        assert (cfg.d_max, cfg.sigma2, cfg.noise_sigma2, cfg.g_values) == (2, 10.0, (4.0,), (0.5,))
        assert (cfg.signals, cfg.noise_draws, cfg.true_model_index) == (50, 50, DEFAULT_TRUE_MODEL_INDEX)

    def test_experiment2_defaults(self):
        cfg = ExperimentConfig.experiment2(seed=1)
        assert (cfg.d_max, cfg.trees, cfg.signals, cfg.noise_draws) == (5, 30, 10, 10)
        assert cfg.g_values == SWEEP_G_VALUES

    def test_seed_is_required(self):
        with pytest.raises(TypeError):
            ExperimentConfig()

    @pytest.mark.parametrize("overrides", [
        {"trees": 0},
        {"signals": 0},
        {"sigma2": 0.0},
        {"noise_sigma2": (-1.0,)},
        {"g_values": (0.5, 1.2)},
        {"seed": -3},
    ])
    def test_validation(self, overrides):
        settings = {"seed": 1}
        settings.update(overrides)
        with pytest.raises(DomainError):
            ExperimentConfig(**settings)

    def test_scalar_sweeps_become_tuples(self):
        cfg = ExperimentConfig(seed=1, noise_sigma2=2, g_values=0.3)
        assert cfg.noise_sigma2 == (2.0,)
        assert cfg.g_values == (0.3,)

    def test_overrides_skip_none(self):
        cfg = ExperimentConfig(seed=1).with_overrides(d_max=3, sigma2=None)
        assert (cfg.d_max, cfg.sigma2) == (3, 10.0)

    def test_load_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"d_max": 1, "g_values": [0.2, 0.4], "signals": 3}))
        cfg = load_config(path, ExperimentConfig(seed=9))
        assert (cfg.seed, cfg.d_max, cfg.g_values, cfg.signals) == (9, 1, (0.2, 0.4), 3)

    def test_load_config_rejects_unknown_fields(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"repetitions": 3}))
        with pytest.raises(DomainError, match="unknown"):
            load_config(path, ExperimentConfig(seed=9))

    def test_load_config_syntax_error(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{\n  'd_max': 1\n}\n")
        with pytest.raises(ParseError):
            load_config(path, ExperimentConfig(seed=9))


class TestResolveMu:

    def test_named_sources(self):
        assert resolve_mu("zeros", 2).energy_by_depth().sum() == 0.0
        assert resolve_mu("synthetic", 2, 8.0).levels[0][0, 0, 0, 0] == 8.0

    def test_corpus_source(self, tmp_path):
        write_signal(tmp_path / "a.csv", np.full((4, 4), 5.0))
        mu = resolve_mu(f"corpus:{tmp_path}", 2)
        np.testing.assert_allclose(mu.levels[0], 5.0)

    def test_hyperparameter_file_depth_mismatch(self, tmp_path):
        path = tmp_path / "hp.json"
        path.write_text(json.dumps({"d_max": 1, "sigma2": 1.0, "noise_sigma2": 1.0}))
        with pytest.raises(DomainError):
            resolve_mu(str(path), 2)


class TestExperiment1:

    def test_true_model_comes_out_on_top(self, tmp_path):
        result = _harness(tmp_path, seed=11).run_experiment1()
        assert result.true_index == DEFAULT_TRUE_MODEL_INDEX
        assert result.argmax == result.true_index
        assert result.average_posterior.sum() == pytest.approx(1.0, abs=1e-10)
        assert result.ranks[result.true_index] == 1

    def test_forced_true_model(self, tmp_path):
        harness = _harness(tmp_path, seed=3, signals=3, noise_draws=2)
        m0 = enumerate_models(2)[DEFAULT_TRUE_MODEL_INDEX]
        hp = HyperParams(g=BranchProbabilities.forcing(m0), sigma2=10.0, noise_sigma2=4.0, mu=synthetic_mu(2))
        result = harness.run_experiment1(hp)
        assert result.average_posterior[result.true_index] == pytest.approx(1.0, abs=1e-12)

    def test_true_model_by_bits(self, tmp_path):
        harness = _harness(tmp_path, seed=3, signals=2, noise_draws=2, true_model="110000100001000010000")
        result = harness.run_experiment1()
        assert result.models[result.true_index] == "110000100001000010000"

    def test_table(self, tmp_path):
        harness = _harness(tmp_path, seed=5, signals=4, noise_draws=3)
        path = harness.write_experiment1(harness.run_experiment1())
        rows = read_results_csv(path)
        assert len(rows) == 17
        assert list(rows[0]) == ["index", "model", "avg_posterior", "std_error", "prior", "is_true", "is_max"]
        assert sum(int(r["is_max"]) for r in rows) == 1
        assert rows[DEFAULT_TRUE_MODEL_INDEX]["is_true"] == "1"
        assert (path.parent / "settings.json").exists()

    def test_rejects_deep_trees(self, tmp_path):
        with pytest.raises(DomainError):
            _harness(tmp_path, seed=1, d_max=4).run_experiment1()

    def test_rejects_bad_index(self, tmp_path):
        with pytest.raises(DomainError):
            _harness(tmp_path, seed=1, true_model_index=17).run_experiment1()

    @pytest.mark.parametrize("sweep", [{"g_values": (0.3, 0.6)}, {"noise_sigma2": (1.0, 4.0)}])
    def test_rejects_sweeps(self, tmp_path, sweep):
        with pytest.raises(DomainError, match="single g and noise variance"):
            _harness(tmp_path, seed=1, signals=2, noise_draws=2, **sweep).run_experiment1()

    def test_summary_is_logged(self, tmp_path):
        logger = RunLogger(str(tmp_path / "run_log.json"))
        cfg = ExperimentConfig(seed=2, signals=2, noise_draws=2, output_dir=str(tmp_path / "out"))
        ExperimentHarness(cfg, logger=logger, verbose=False).run_experiment1()
        events = [entry["event"] for entry in logger.entries()]
        assert events == ["experiment1_summary"]

    @pytest.mark.slow
    def test_repeated_harness_runs(self, tmp_path):
        hits = sum(
            _harness(tmp_path, seed=seed).run_experiment1().argmax == DEFAULT_TRUE_MODEL_INDEX
            for seed in range(20)
        )
        assert hits >= 19


class TestExperiment2:

    def test_zero_noise_gives_zero_risk(self, tmp_path):
        harness = _harness(tmp_path, seed=4, d_max=2, noise_sigma2=(0.0,), trees=2, signals=2, noise_draws=2)
        result = harness.run_experiment2()
        assert result.risk(0.5, "bayes")["risk"] == 0.0

    def test_zero_mu_risk_is_posterior_variance(self, tmp_path):
        harness = _harness(tmp_path, seed=8, d_max=3, mu="zeros", trees=4, signals=10, noise_draws=5)
        result = harness.run_experiment2()
        bayes = result.risk(0.5, "bayes")
        assert bayes["risk"] == pytest.approx(20.0 / 7.0, abs=0.15)
        for i in (1, 2, 3):
            assert result.risk(0.5, f"perfect_{i}")["diff_vs_bayes"] == pytest.approx(0.0, abs=1e-12)

    def test_methods_and_noise_sweep(self, tmp_path):
        harness = _harness(tmp_path, seed=6, d_max=2, noise_sigma2=(1.0, 4.0), g_values=(0.2, 0.8),
                           trees=2, signals=2, noise_draws=2)
        result = harness.run_experiment2()
        assert len(result.risk_rows) == 2 * 2 * 3
        assert len(result.depth_rows) == 4
        table = risk_table(result, noise_sigma2=4.0)
        assert sorted(table) == [0.2, 0.8]
        assert sorted(table[0.2]) == ["bayes", "perfect_1", "perfect_2"]

    def test_same_seed_same_bytes(self, tmp_path):
        outputs = []
        for run in ("first", "second"):
            harness = _harness(tmp_path, seed=21, d_max=2, g_values=(0.3, 0.7), trees=3, signals=2, noise_draws=2,
                               output_dir=str(tmp_path / run))
            risk, depth = harness.write_experiment2(harness.run_experiment2())
            outputs.append((risk.read_bytes(), depth.read_bytes()))
        assert outputs[0] == outputs[1]

    @pytest.mark.slow
    def test_bayes_risk_is_smallest(self, tmp_path):
        harness = _harness(tmp_path, **ExperimentConfig.experiment2(seed=17).to_dict())
        result = harness.run_experiment2()
        for g, methods in risk_table(result).items():
            baselines = sorted((row for name, row in methods.items() if name != "bayes"),
                               key=lambda row: row["diff_vs_bayes"])
            for row in baselines:
                assert row["diff_vs_bayes"] >= -2.0 * row["diff_std_error"], (g, row["method"])
            for row in baselines[-2:]:
                assert row["diff_vs_bayes"] >= 2.0 * row["diff_std_error"], (g, row["method"])
        depths = [row["average_depth"] for row in result.depth_rows]
        correlation = stats.spearmanr([row["g"] for row in result.depth_rows], depths)[0]
        assert correlation >= 0.9


def test_true_model_serialization_is_stable():
    assert serialize_model(enumerate_models(2)[DEFAULT_TRUE_MODEL_INDEX]) == "1010000010000"
