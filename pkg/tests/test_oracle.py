import numpy as np
import pytest
from scipy import stats

from bayes.denoise import bayes_denoise, fixed_tree_denoise
from bayes.hyperparams import HyperParams, synthetic_mu
from bayes.posterior import compute_posterior_state, leaf_marginal, posterior_tree_probability
from oracle.brute_force import (
    brute_force_denoise,
    brute_force_evidence,
    brute_force_leaf_marginal,
    brute_force_posterior,
    dense_basis_matrix,
    dense_leaf_coefficients,
    dense_prior_mean,
)
from tree.prior import BranchProbabilities
from tree.quadtree import QuadTreeModel, enumerate_models, perfect_tree
from utils.errors import DomainError
from wavelet.nodes import ROOT, NodeId, all_nodes
from wavelet.packets import PacketTable, analyze_full, synthesize_tree
from wavelet.walsh import basis_vector


def _relative_error(estimate, reference) -> float:
    return float(np.linalg.norm(estimate - reference) / np.linalg.norm(reference))


def _observation(rng, hp: HyperParams) -> np.ndarray:
    """y near the prior mean of a random tree, so no model's posterior underflows."""
    models = enumerate_models(hp.d_max)
    m = models[int(rng.integers(0, len(models)))]
    return synthesize_tree(m, hp.mu) + 3.0 * rng.standard_normal((hp.side, hp.side))


class TestDenseBasisMatrix:

    def test_root_only_is_identity(self):
        np.testing.assert_array_equal(dense_basis_matrix(QuadTreeModel.root_only(2)), np.eye(16))

    def test_orthonormal_for_every_model(self):
        for m in enumerate_models(2):
            w = dense_basis_matrix(m)
            np.testing.assert_allclose(w @ w.T, np.eye(16), atol=1e-12)

    def test_first_leaf_occupies_first_rows(self):
        w = dense_basis_matrix(perfect_tree(1, 2))
        first_leaf = np.array([basis_vector(NodeId(1, 0, 0), k0, k1, 2).ravel() for k0 in (0, 1) for k1 in (0, 1)])
        np.testing.assert_array_equal(w[:4], first_leaf)

    def test_matches_fast_synthesis(self, rng):
        table = PacketTable([rng.standard_normal(level.shape) for level in PacketTable.zeros(2).levels])
        for m in enumerate_models(2):
            dense = dense_basis_matrix(m).T @ dense_leaf_coefficients(m, table)
            np.testing.assert_allclose(dense.reshape(4, 4), synthesize_tree(m, table), atol=1e-12)

    def test_rows_give_leaf_coefficients(self, rng):
        x = rng.standard_normal((4, 4))
        table = analyze_full(x)
        for m in enumerate_models(2):
            np.testing.assert_allclose(dense_basis_matrix(m) @ x.ravel(), dense_leaf_coefficients(m, table),
                                       atol=1e-12)

    def test_size_guard(self):
        with pytest.raises(DomainError):
            dense_basis_matrix(QuadTreeModel.root_only(5))


class TestEvidence:

    def test_mode_at_prior_mean(self):
        hp = HyperParams(g=BranchProbabilities.constant(2, 0.5), sigma2=10.0, noise_sigma2=4.0,
                         mu=synthetic_mu(2))
        m = enumerate_models(2)[6]
        mode = dense_prior_mean(m, hp).reshape(4, 4)
        best = brute_force_evidence(mode, m, hp)
        for t in (-1.0, -0.25, 0.25, 1.0):
            assert brute_force_evidence(mode + t, m, hp) < best

    def test_differs_from_psi_products_by_a_constant(self, rng, make_hyperparams):
        hp = make_hyperparams(rng, 2)
        y = _observation(rng, hp)
        st = compute_posterior_state(y, hp)
        offsets = [
            brute_force_evidence(y, m, hp) - sum(float(st.log_psi[s.i][s.j0, s.j1]) for s in m.leaves)
            for m in enumerate_models(2)
        ]
        np.testing.assert_allclose(offsets, offsets[0], atol=1e-8)

    def test_single_pixel_model(self, rng):
        mu = PacketTable([np.array([[[[2.5]]]])])
        hp = HyperParams(g=BranchProbabilities.constant(0, 0.0), sigma2=3.0, noise_sigma2=1.0, mu=mu)
        y = np.array([[4.0]])
        expected = stats.norm.logpdf(4.0, loc=2.5, scale=2.0)
        assert brute_force_evidence(y, QuadTreeModel.root_only(0), hp) == pytest.approx(expected, rel=1e-12)

    def test_depth_guard(self):
        hp = HyperParams(g=BranchProbabilities.constant(3, 0.5), sigma2=10.0, noise_sigma2=4.0)
        with pytest.raises(DomainError):
            brute_force_posterior(np.zeros((8, 8)), hp)


class TestOracleEquivalence:

    def test_recursive_results_match_exhaustive_sums(self, rng, make_hyperparams):
        models = enumerate_models(2)
        nodes = list(all_nodes(2))
        for _ in range(100):
            hp = make_hyperparams(rng, 2)
            y = _observation(rng, hp)
            st = compute_posterior_state(y, hp)
            exhaustive = brute_force_posterior(y, hp)

            recursive = [posterior_tree_probability(m, st) for m in models]
            reference = [p for _, p in exhaustive]
            np.testing.assert_allclose(recursive, reference, rtol=1e-8, atol=1e-14)

            for s in nodes:
                summed = sum(p for m, p in exhaustive if s in m.leaves)
                assert leaf_marginal(s, st) == pytest.approx(summed, abs=1e-10)

            for s in nodes:
                if s.i == hp.d_max:
                    continue
                reached = sum(p for m, p in exhaustive if m.contains(s))
                if reached < 1e-6:
                    continue
                branched = sum(p for m, p in exhaustive if s in m.inner)
                assert st.g_tilde_at(s) == pytest.approx(branched / reached, abs=1e-8)

            assert _relative_error(bayes_denoise(y, hp, st), brute_force_denoise(y, hp)) <= 1e-8

    def test_leaf_marginal_oracle(self, rng, make_hyperparams):
        hp = make_hyperparams(rng, 2)
        y = _observation(rng, hp)
        st = compute_posterior_state(y, hp)
        for s in (ROOT, NodeId(1, 0, 1), NodeId(2, 3, 2)):
            assert leaf_marginal(s, st) == pytest.approx(brute_force_leaf_marginal(s, y, hp), abs=1e-10)

    def test_forced_tree(self, rng):
        m = enumerate_models(2)[11]
        hp = HyperParams(g=BranchProbabilities.forcing(m), sigma2=10.0, noise_sigma2=4.0, mu=synthetic_mu(2))
        y = 10.0 * rng.standard_normal((4, 4))
        np.testing.assert_allclose(brute_force_denoise(y, hp), fixed_tree_denoise(y, m, hp), atol=1e-10)

    def test_zero_mu_shrinkage(self, rng, default_hyperparams):
        y = 10.0 * rng.standard_normal((4, 4))
        np.testing.assert_allclose(brute_force_denoise(y, default_hyperparams), (5.0 / 7.0) * y, atol=1e-12)

    @pytest.mark.slow
    def test_depth_three(self, rng, make_hyperparams):
        hp = make_hyperparams(rng, 3)
        y = synthesize_tree(perfect_tree(2, 3), hp.mu) + 3.0 * rng.standard_normal((8, 8))
        reference = brute_force_denoise(y, hp, allow_slow=True)
        assert _relative_error(bayes_denoise(y, hp), reference) <= 1e-8
