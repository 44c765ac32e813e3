import json

import numpy as np
import pytest

from bayes.hyperparams import HyperParams, synthetic_mu
from store.corpus import estimate_mu, load_corpus
from store.hyperparams_file import hyperparams_from_dict, read_hyperparams, write_hyperparams
from store.results import (
    models_table,
    parse_model,
    read_coefficients,
    read_results_csv,
    serialize_model,
    write_coefficients,
    write_results_csv,
)
from store.signals import read_signal, write_signal
from tree.prior import BranchProbabilities
from tree.quadtree import QuadTreeModel, enumerate_models, perfect_tree
from utils.errors import DomainError, ParseError, SignalIOError
from wavelet.nodes import ROOT, NodeId
from wavelet.packets import analyze_full, synthesize_tree


class TestSignalFiles:

    def test_plain_pgm(self, tmp_path):
        path = tmp_path / "sevens.pgm"
        path.write_text("P2\n# constant test image\n4 4\n255\n" + "7 7 7 7\n" * 4)
        np.testing.assert_array_equal(read_signal(path), np.full((4, 4), 7.0))

    def test_binary_pgm(self, tmp_path):
        path = tmp_path / "ramp.pgm"
        raster = bytes(range(16))
        path.write_bytes(b"P5\n4 4\n255\n" + raster)
        np.testing.assert_array_equal(read_signal(path), np.arange(16, dtype=float).reshape(4, 4))

    def test_binary_pgm_sixteen_bit(self, tmp_path):
        path = tmp_path / "deep.pgm"
        values = np.array([[1000, 2], [65535, 0]], dtype=">u2")
        path.write_bytes(b"P5 2 2 65535\n" + values.tobytes())
        np.testing.assert_array_equal(read_signal(path), values.astype(float))

    def test_csv_round_trip_is_exact(self, tmp_path, rng):
        x = rng.standard_normal((8, 8)) * 1e3
        path = write_signal(tmp_path / "x.csv", x)
        np.testing.assert_array_equal(read_signal(path), x)

    def test_pgm_round_trip(self, tmp_path):
        x = np.arange(16, dtype=float).reshape(4, 4) * 20.0
        path = write_signal(tmp_path / "x.pgm", x)
        np.testing.assert_array_equal(read_signal(path), x)
        assert path.read_text().splitlines()[:3] == ["P2", "4 4", "300"]

    def test_pgm_rejects_negative_values(self, tmp_path):
        with pytest.raises(DomainError, match="negative"):
            write_signal(tmp_path / "x.pgm", -np.ones((2, 2)))

    def test_non_power_of_two_side(self, tmp_path):
        path = tmp_path / "five.csv"
        path.write_text("\n".join(",".join(["1"] * 5) for _ in range(5)) + "\n")
        with pytest.raises(ParseError, match="side must be a power of two"):
            read_signal(path)

    def test_non_square(self, tmp_path):
        path = tmp_path / "wide.pgm"
        path.write_text("P2 4 2 255\n" + "0 " * 8 + "\n")
        with pytest.raises(ParseError, match="square"):
            read_signal(path)

    def test_bad_gray_level_location(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_text("P2\n2 2\n255\n1 2\n3 x\n")
        with pytest.raises(ParseError) as info:
            read_signal(path)
        assert (info.value.line, info.value.column) == (5, 3)

    def test_gray_level_above_maxval(self, tmp_path):
        path = tmp_path / "bright.pgm"
        path.write_text("P2\n2 2\n15\n1 2\n3 16\n")
        with pytest.raises(ParseError, match="outside"):
            read_signal(path)

    def test_bad_csv_cell_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(ParseError) as info:
            read_signal(path)
        assert (info.value.line, info.value.column) == (2, 2)

    def test_ragged_csv(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ParseError):
            read_signal(path)

    def test_unsupported_magic(self, tmp_path):
        path = tmp_path / "color.pgm"
        path.write_text("P3\n2 2\n255\n")
        with pytest.raises(ParseError, match="magic"):
            read_signal(path)

    def test_depth_mismatch(self, tmp_path):
        path = write_signal(tmp_path / "x.csv", np.zeros((4, 4)))
        with pytest.raises(ParseError):
            read_signal(path, d_max=3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SignalIOError):
            read_signal(tmp_path / "absent.csv")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DomainError):
            read_signal(tmp_path / "image.png")


class TestCorpus:

    def test_constant_image(self):
        mu = estimate_mu([np.full((2, 2), 3.0)], 1)
        np.testing.assert_allclose(mu[ROOT], 3.0)
        np.testing.assert_allclose(mu[NodeId(1, 0, 0)], 6.0)
        for j0, j1 in ((0, 1), (1, 0), (1, 1)):
            np.testing.assert_allclose(mu[NodeId(1, j0, j1)], 0.0, atol=1e-14)

    def test_blocks_are_constant(self, rng):
        mu = estimate_mu([rng.uniform(0, 255, (8, 8)) for _ in range(3)], 3)
        for s in mu.nodes():
            block = mu[s]
            np.testing.assert_allclose(block, block.flat[0], rtol=1e-12)

    def test_copies_equal_single_image(self, rng):
        x = rng.uniform(0, 255, (4, 4))
        single = estimate_mu([x], 2)
        repeated = estimate_mu([x, x, x], 2)
        for a, b in zip(single.levels, repeated.levels):
            np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_block_mean_of_coefficients(self, rng):
        corpus = [rng.uniform(0, 255, (4, 4)) for _ in range(2)]
        mu = estimate_mu(corpus, 2)
        s = NodeId(1, 1, 0)
        expected = np.mean([analyze_full(x)[s].mean() for x in corpus])
        assert mu[s][0, 0] == pytest.approx(expected, rel=1e-12)

    def test_empty_corpus(self):
        with pytest.raises(DomainError):
            estimate_mu([], 2)

    def test_load_corpus_sorted(self, tmp_path):
        write_signal(tmp_path / "b.csv", np.full((4, 4), 2.0))
        write_signal(tmp_path / "a.pgm", np.full((4, 4), 1.0))
        (tmp_path / "notes.txt").write_text("ignored\n")
        corpus = load_corpus(tmp_path)
        assert [x[0, 0] for x in corpus] == [1.0, 2.0]

    def test_load_corpus_empty(self, tmp_path):
        with pytest.raises(DomainError):
            load_corpus(tmp_path)
        with pytest.raises(SignalIOError):
            load_corpus(tmp_path / "missing")


class TestModelStrings:

    def test_examples(self):
        assert serialize_model(QuadTreeModel.root_only(2)) == "0"
        assert serialize_model(perfect_tree(1, 1)) == "10000"
        assert serialize_model(enumerate_models(2)[6]) == "1010000010000"

    def test_leaves_at_full_depth_emit_a_zero(self):
        m = parse_model("1010000010000", 2)
        assert len(m.leaves) == 10
        assert sum(leaf.i == 2 for leaf in m.leaves) == 8
        with pytest.raises(DomainError, match="trailing"):
            parse_model("10100000100000", 2)

    def test_round_trip_every_model(self):
        for m in enumerate_models(2):
            assert parse_model(serialize_model(m), 2) == m

    @pytest.mark.parametrize("bits", ["", "2", "1000", "100000", "10000"])
    def test_rejects_malformed(self, bits):
        d_max = 0 if bits == "10000" else 2
        with pytest.raises(DomainError):
            parse_model(bits, d_max)


class TestHyperparamFiles:

    def test_round_trip(self, tmp_path):
        g = BranchProbabilities.from_mapping(2, {NodeId(1, 0, 1): 0.9}, default=0.3)
        hp = HyperParams(g=g, sigma2=10.0, noise_sigma2=4.0, mu=synthetic_mu(2, scale=5.0))
        loaded = read_hyperparams(write_hyperparams(tmp_path / "hp.json", hp))
        assert (loaded.sigma2, loaded.noise_sigma2, loaded.d_max) == (10.0, 4.0, 2)
        for a, b in zip(loaded.g.levels, hp.g.levels):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(loaded.mu.levels, hp.mu.levels):
            np.testing.assert_array_equal(a, b)

    def test_scalar_g_and_constant_blocks(self):
        hp = hyperparams_from_dict({"d_max": 1, "sigma2": 2, "noise_sigma2": 1, "g": 0.25,
                                    "mu": {"0/0/0": [[1, 2], [3, 4]], "1/1/1": 7}})
        assert hp.g[ROOT] == 0.25
        np.testing.assert_array_equal(hp.mu[ROOT], [[1.0, 2.0], [3.0, 4.0]])
        assert hp.mu[NodeId(1, 1, 1)][0, 0] == 7.0
        assert hp.mu[NodeId(1, 0, 0)][0, 0] == 0.0

    def test_absent_mu_and_g(self):
        hp = hyperparams_from_dict({"d_max": 2, "sigma2": 1.0, "noise_sigma2": 0.0})
        assert hp.mu.energy_by_depth().sum() == 0.0
        assert hp.g.as_constant() == 0.0

    @pytest.mark.parametrize("data", [
        {"sigma2": 1.0, "noise_sigma2": 1.0},
        {"d_max": 2, "noise_sigma2": 1.0},
        {"d_max": 2, "sigma2": 0.0, "noise_sigma2": 1.0},
        {"d_max": 2, "sigma2": 1.0, "noise_sigma2": 1.0, "g": 2.0},
        {"d_max": 1, "sigma2": 1.0, "noise_sigma2": 1.0, "mu": {"0/0/0": [[1, 2]]}},
        {"d_max": 1, "sigma2": 1.0, "noise_sigma2": 1.0, "g": {"1/0/0": 0.5}},
    ])
    def test_invalid_content(self, data):
        with pytest.raises(ParseError):
            hyperparams_from_dict(data)

    def test_json_syntax_error_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "d_max": 2,\n  "sigma2": ,\n}\n')
        with pytest.raises(ParseError) as info:
            read_hyperparams(path)
        assert info.value.line == 3


class TestResultFiles:

    def test_results_csv(self, tmp_path):
        rows = models_table(enumerate_models(1), [0.25, 0.75], "posterior")
        path = write_results_csv(rows, tmp_path / "models.csv")
        loaded = read_results_csv(path)
        assert [r["model"] for r in loaded] == ["0", "10000"]
        assert float(loaded[1]["posterior"]) == 0.75
        assert path.read_text().splitlines()[0] == "index,model,posterior"

    def test_results_csv_needs_header(self, tmp_path):
        with pytest.raises(DomainError):
            write_results_csv([], tmp_path / "empty.csv")
        path = write_results_csv([], tmp_path / "empty.csv", ["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_coefficient_round_trip(self, tmp_path, rng):
        x = rng.standard_normal((8, 8))
        m = enumerate_models(2)[6]
        m3 = parse_model(serialize_model(m), 3)
        path = write_coefficients(tmp_path / "c.csv", m3, analyze_full(x))
        blocks = read_coefficients(path, 3)
        assert set(blocks) == m3.leaves
        np.testing.assert_allclose(synthesize_tree(m3, blocks), x, atol=1e-10)

    def test_incomplete_coefficients(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("node,k0,k1,value\n1/0/0,0,0,1.0\n")
        with pytest.raises(ParseError, match="incomplete"):
            read_coefficients(path, 2)

    def test_coefficient_shift_out_of_block(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("node,k0,k1,value\n1/0/0,2,0,1.0\n")
        with pytest.raises(ParseError) as info:
            read_coefficients(path, 2)
        assert info.value.line == 2

    def test_bad_coefficient_header(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("a,b,c,d\n")
        with pytest.raises(ParseError):
            read_coefficients(path, 2)

    def test_settings_file_is_json(self, tmp_path):
        path = tmp_path / "hp.json"
        write_hyperparams(path, HyperParams(g=BranchProbabilities.constant(1, 0.5), sigma2=1.0, noise_sigma2=1.0))
        data = json.loads(path.read_text())
        assert data["g"] == 0.5
        assert data["mu"] == {}
