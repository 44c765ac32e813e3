"""
denoise.py

Bayes-optimal estimation of x from y = x + eps under squared loss.

    delta*(y) = a y + (1 - a) sum_m p(m | y) (W^m)^T mu^m,   a = sigma^2 / (sigma^2 + sigma_eps^2)

The model average is accumulated bottom-up over the complete quadtree:

    r_s = (1 - g~_s) mu_s                                   if i(s) = d_max
        = (1 - g~_s) mu_s + g~_s * merge(r of the children)  otherwise

Each r_s is stored as a coefficient block in node s's own basis, so the
whole recursion costs O(L^2 d_max) instead of O(L^4).
"""

import numpy as np

from bayes.hyperparams import HyperParams
from bayes.posterior import PosteriorState, compute_posterior_state
from tree.quadtree import QuadTreeModel, perfect_tree
from utils.errors import DomainError
from wavelet.packets import as_signal, merge_level, synthesize_tree

__all__ = [
    "bayes_denoise",
    "fixed_tree_denoise",
    "mean_squared_loss",
    "model_averaged_mean",
    "perfect_tree",
    "posterior_mean_given_tree",
]


def model_averaged_mean(st: PosteriorState, hp: HyperParams) -> np.ndarray:
    """r at the root: sum_m p(m | y) (W^m)^T mu^m."""
    d_max = hp.d_max
    stay = [np.exp(level)[:, :, None, None] for level in st.log_1m_g_tilde]
    r = stay[d_max] * hp.mu.levels[d_max]
    for i in range(d_max - 1, -1, -1):
        gt = np.exp(st.log_g_tilde[i])[:, :, None, None]
        r = stay[i] * hp.mu.levels[i] + gt * merge_level(r)
    return r[0, 0]


def bayes_denoise(y, hp: HyperParams, st: PosteriorState = None) -> np.ndarray:
    """delta*(y); pass `st` to reuse a posterior state computed for the same y."""
    signal = as_signal(y, hp.d_max)
    if hp.total_variance <= 0.0:
        raise DomainError("sigma2 + noise_sigma2 must be positive")
    if hp.noise_sigma2 == 0.0:
        return signal.copy()
    if st is None:
        st = compute_posterior_state(signal, hp)
    a = hp.shrinkage
    return a * signal + (1.0 - a) * model_averaged_mean(st, hp)


def fixed_tree_denoise(y, m: QuadTreeModel, hp: HyperParams) -> np.ndarray:
    """delta^m(y) = a y + (1 - a) (W^m)^T mu^m, the estimator that trusts one tree."""
    signal = as_signal(y, hp.d_max)
    if m.d_max != hp.d_max:
        raise DomainError(f"model has d_max={m.d_max}, hyperparameters have d_max={hp.d_max}")
    a = hp.shrinkage
    return a * signal + (1.0 - a) * synthesize_tree(m, hp.mu)


# The mean of p(x | m, y) is the same expression.
posterior_mean_given_tree = fixed_tree_denoise


def mean_squared_loss(x, estimate) -> float:
    """Per-pixel squared error (1/L^2) ||x - estimate||^2."""
    x = np.asarray(x, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if x.shape != estimate.shape:
        raise DomainError(f"shape mismatch: {x.shape} vs {estimate.shape}")
    return float(np.mean((x - estimate) ** 2))
