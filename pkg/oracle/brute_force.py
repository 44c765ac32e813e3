"""
brute_force.py

Exhaustive reference computations over every model m, built from dense
basis matrices. They exist to check the recursive algorithms and are
only practical for tiny signals.

Row order of the dense W^m: leaves in depth-first order with children in
canonical order (0,0), (0,1), (1,0), (1,1); inside a leaf, shifts
(k0, k1) in raster order. Columns are pixels in raster order.
"""

from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from bayes.hyperparams import HyperParams
from tree.prior import log_prior_probability
from tree.quadtree import QuadTreeModel, enumerate_models
from utils.errors import DomainError
from wavelet.nodes import NodeId
from wavelet.packets import as_signal
from wavelet.walsh import basis_vector

MAX_DENSE_SIDE = 16
MAX_ORACLE_DEPTH = 2


def _check_depth(d_max: int, allow_slow: bool):
    limit = 3 if allow_slow else MAX_ORACLE_DEPTH
    if d_max > limit:
        raise DomainError(f"brute force is limited to d_max <= {limit}, got {d_max}")


def dense_basis_matrix(m: QuadTreeModel) -> np.ndarray:
    """W^m as an L^2 x L^2 matrix whose rows are the flattened basis signals."""
    side = 1 << m.d_max
    if side > MAX_DENSE_SIDE:
        raise DomainError(f"dense basis matrices are limited to L <= {MAX_DENSE_SIDE}, got L={side}")
    return np.concatenate([_node_rows(leaf, m.d_max) for leaf in m.leaf_order()])


@lru_cache(maxsize=None)
def _node_rows(s: NodeId, d_max: int) -> np.ndarray:
    span = s.block_side(d_max)
    rows = np.array([basis_vector(s, k0, k1, d_max).ravel() for k0 in range(span) for k1 in range(span)])
    rows.setflags(write=False)
    return rows


def dense_leaf_coefficients(m: QuadTreeModel, coeffs) -> np.ndarray:
    """theta for model m: the leaf blocks of `coeffs` stacked in row order."""
    return np.concatenate([np.asarray(coeffs[leaf]).ravel() for leaf in m.leaf_order()])


def dense_prior_mean(m: QuadTreeModel, hp: HyperParams) -> np.ndarray:
    """(W^m)^T mu^m as a flattened signal."""
    return dense_basis_matrix(m).T @ dense_leaf_coefficients(m, hp.mu)


def brute_force_evidence(y, m: QuadTreeModel, hp: HyperParams, allow_slow: bool = False) -> float:
    """ln p(y | m) = ln N(y | (W^m)^T mu^m, (sigma^2 + sigma_eps^2) I)."""
    _check_depth(hp.d_max, allow_slow)
    signal = as_signal(y, hp.d_max)
    return float(multivariate_normal.logpdf(signal.ravel(), mean=dense_prior_mean(m, hp), cov=hp.total_variance))


def brute_force_posterior(y, hp: HyperParams, allow_slow: bool = False) -> List[Tuple[QuadTreeModel, float]]:
    """(m, p(m | y)) for every model, normalizing p(y | m) p(m) over all m."""
    _check_depth(hp.d_max, allow_slow)
    models = enumerate_models(hp.d_max)
    log_joint = np.array([
        brute_force_evidence(y, m, hp, allow_slow) + log_prior_probability(m, hp.g) for m in models
    ])
    log_posterior = log_joint - logsumexp(log_joint)
    return list(zip(models, np.exp(log_posterior)))


def brute_force_leaf_marginal(s: NodeId, y, hp: HyperParams) -> float:
    """sum of p(m | y) over the models that have s as a leaf."""
    return float(sum(p for m, p in brute_force_posterior(y, hp) if s in m.leaves))


def brute_force_denoise(y, hp: HyperParams, allow_slow: bool = False) -> np.ndarray:
    """delta*(y) = sum_m p(m | y) (a y + (1 - a) (W^m)^T mu^m), summed over every model."""
    signal = as_signal(y, hp.d_max)
    a = hp.shrinkage
    estimate = np.zeros(signal.size)
    for m, p in brute_force_posterior(signal, hp, allow_slow):
        estimate += p * (a * signal.ravel() + (1.0 - a) * dense_prior_mean(m, hp))
    return estimate.reshape(signal.shape)
