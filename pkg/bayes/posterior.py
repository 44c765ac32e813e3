"""
posterior.py

Posterior quantities of the tree model given an observation y.

For every node s of the complete quadtree

    ln psi_s   = (W_s y - mu_s / 2)^T mu_s / (sigma^2 + sigma_eps^2)
    psi~_s     = psi_s                                    if i(s) = d_max
               = (1 - g_s) psi_s + g_s prod_{Ch(s)} psi~  otherwise
    g~_s       = g_s prod_{Ch(s)} psi~ / psi~_s           (0 at depth d_max)

and p(m | y) = prod_{L^m} (1 - g~_s) prod_{I^m} g~_s. All products are
kept as logarithms; psi_s easily leaves the float range otherwise. Both
ln g~_s and ln (1 - g~_s) are stored so that neither loses precision when
g~_s is close to 0 or 1.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from bayes.hyperparams import HyperParams
from tree.quadtree import ModelCatalog, QuadTreeModel, flatten_levels
from utils.errors import DomainError
from wavelet.nodes import NodeId
from wavelet.packets import PacketTable, analyze_full, as_signal


@dataclass(frozen=True)
class PosteriorState:
    log_psi: Tuple[np.ndarray, ...]
    log_psi_tilde: Tuple[np.ndarray, ...]
    log_g_tilde: Tuple[np.ndarray, ...]
    log_1m_g_tilde: Tuple[np.ndarray, ...]
    shrinkage: float
    posterior_variance: float

    @property
    def d_max(self) -> int:
        return len(self.log_psi) - 1

    @property
    def g_tilde(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.exp(level) for level in self.log_g_tilde)

    def g_tilde_at(self, s: NodeId) -> float:
        s.validate(self.d_max)
        return float(np.exp(self.log_g_tilde[s.i][s.j0, s.j1]))

    def log_evidence_ratio(self) -> float:
        """ln psi~ at the root: ln sum_m p(m) prod_{L^m} psi_s."""
        return float(self.log_psi_tilde[0][0, 0])


def _sum_children(level: np.ndarray) -> np.ndarray:
    rows = level.shape[0] // 2
    return level.reshape(rows, 2, rows, 2).sum(axis=(1, 3))


def compute_posterior_state(y, hp: HyperParams, coefficients: PacketTable = None) -> PosteriorState:
    """
    Bottom-up evaluation of ln psi, ln psi~ and g~ for every node.

    `coefficients` may pass a precomputed analyze_full(y).
    """
    if hp.total_variance <= 0.0:
        raise DomainError("sigma2 + noise_sigma2 must be positive")
    if coefficients is None:
        coefficients = analyze_full(as_signal(y, hp.d_max))
    elif coefficients.d_max != hp.d_max:
        raise DomainError(f"coefficients have d_max={coefficients.d_max}, hyperparameters have d_max={hp.d_max}")

    log_psi = [
        np.sum((c - 0.5 * mu) * mu, axis=(2, 3)) / hp.total_variance
        for c, mu in zip(coefficients.levels, hp.mu.levels)
    ]

    d_max = hp.d_max
    log_psi_tilde = [None] * (d_max + 1)
    log_g_tilde = [None] * (d_max + 1)
    log_1m_g_tilde = [None] * (d_max + 1)
    log_psi_tilde[d_max] = log_psi[d_max]
    log_g_tilde[d_max] = np.full(log_psi[d_max].shape, -np.inf)
    log_1m_g_tilde[d_max] = np.zeros(log_psi[d_max].shape)

    for i in range(d_max - 1, -1, -1):
        g = hp.g.levels[i]
        children = _sum_children(log_psi_tilde[i + 1])
        never, always = g == 0.0, g == 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            stay = np.log1p(-g) + log_psi[i]
            branch = np.log(g) + children
            mixed = np.logaddexp(stay, branch)
            # g = 0 and g = 1 are decided without touching ln 0
            lpt = np.where(never, log_psi[i], np.where(always, children, mixed))
            log_g = np.where(never, -np.inf, np.where(always, 0.0, np.minimum(branch - lpt, 0.0)))
            log_1m_g = np.where(never, 0.0, np.where(always, -np.inf, np.minimum(stay - lpt, 0.0)))
        log_psi_tilde[i] = lpt
        log_g_tilde[i] = log_g
        log_1m_g_tilde[i] = log_1m_g

    for level in log_psi + log_psi_tilde + log_g_tilde + log_1m_g_tilde:
        level.setflags(write=False)
    return PosteriorState(
        log_psi=tuple(log_psi),
        log_psi_tilde=tuple(log_psi_tilde),
        log_g_tilde=tuple(log_g_tilde),
        log_1m_g_tilde=tuple(log_1m_g_tilde),
        shrinkage=hp.shrinkage,
        posterior_variance=hp.posterior_variance,
    )


def log_posterior_tree_probability(m: QuadTreeModel, st: PosteriorState) -> float:
    if m.d_max != st.d_max:
        raise DomainError(f"model has d_max={m.d_max}, posterior state has d_max={st.d_max}")
    total = sum(float(st.log_1m_g_tilde[s.i][s.j0, s.j1]) for s in m.leaves)
    total += sum(float(st.log_g_tilde[s.i][s.j0, s.j1]) for s in m.inner)
    return total


def posterior_tree_probability(m: QuadTreeModel, st: PosteriorState) -> float:
    """p(m | y) = prod_{L^m} (1 - g~_s) prod_{I^m} g~_s."""
    return float(np.exp(log_posterior_tree_probability(m, st)))


def posterior_probabilities(catalog: ModelCatalog, st: PosteriorState) -> np.ndarray:
    """p(m | y) for every model of the catalog, in catalog order."""
    if catalog.d_max != st.d_max:
        raise DomainError(f"catalog has d_max={catalog.d_max}, posterior state has d_max={st.d_max}")
    log_p = catalog.log_products(flatten_levels(st.log_1m_g_tilde), flatten_levels(st.log_g_tilde))
    return np.exp(log_p)


def leaf_marginal(s: NodeId, st: PosteriorState) -> float:
    """sum over models having s as a leaf of p(m | y) = (1 - g~_s) prod_{An(s)} g~."""
    s.validate(st.d_max)
    log_p = float(st.log_1m_g_tilde[s.i][s.j0, s.j1])
    for a in s.ancestors():
        log_p += float(st.log_g_tilde[a.i][a.j0, a.j1])
    return float(np.exp(log_p))


def leaf_marginals(st: PosteriorState) -> Tuple[np.ndarray, ...]:
    """Leaf marginals of every node, one (2^i x 2^i) map per depth."""
    log_reach = np.zeros((1, 1))
    maps = []
    for i in range(st.d_max + 1):
        maps.append(np.exp(log_reach + st.log_1m_g_tilde[i]))
        if i < st.d_max:
            log_reach = np.kron(log_reach + st.log_g_tilde[i], np.ones((2, 2)))
    return tuple(maps)
