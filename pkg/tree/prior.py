"""
prior.py

The tree prior p(m) = prod_{s in L^m} (1 - g_s) prod_{s in I^m} g_s and
sampling from it.
"""

from typing import Mapping, Sequence, Union

import numpy as np

from utils.errors import DomainError
from tree.quadtree import QuadTreeModel
from wavelet.nodes import NodeId, ROOT


class BranchProbabilities:
    """
    Per-node branch probabilities g_s, stored as one (2^i x 2^i) map per
    depth. Nodes at depth d_max never branch, so their g_s is 0.
    """

    def __init__(self, levels: Sequence[np.ndarray]):
        if not levels:
            raise DomainError("branch probabilities need at least the root level")
        d_max = len(levels) - 1
        frozen = []
        for i, level in enumerate(levels):
            level = np.array(level, dtype=np.float64)
            if level.shape != (1 << i, 1 << i):
                raise DomainError(f"depth {i} branch probabilities have shape {level.shape}, expected {(1 << i, 1 << i)}")
            if not np.all((level >= 0.0) & (level <= 1.0)):
                raise DomainError(f"branch probabilities at depth {i} must lie in [0, 1]")
            level.setflags(write=False)
            frozen.append(level)
        if np.any(frozen[d_max] != 0.0):
            raise DomainError(f"branch probabilities at depth d_max={d_max} must be 0")
        self.levels = tuple(frozen)
        self.d_max = d_max

    @classmethod
    def constant(cls, d_max: int, g: float) -> "BranchProbabilities":
        """Broadcast one g to every node above depth d_max."""
        if not 0.0 <= g <= 1.0:
            raise DomainError(f"branch probability must lie in [0, 1], got {g}")
        return cls([np.full((1 << i, 1 << i), g if i < d_max else 0.0) for i in range(d_max + 1)])

    @classmethod
    def from_mapping(cls, d_max: int, values: Mapping[NodeId, float], default: float = 0.0) -> "BranchProbabilities":
        """Per-node values; nodes not listed take `default` (depth d_max stays 0)."""
        base = cls.constant(d_max, default)
        levels = [np.array(level) for level in base.levels]
        for node, g in values.items():
            node = NodeId(*node).validate(d_max)
            levels[node.i][node.j0, node.j1] = g
        return cls(levels)

    @classmethod
    def forcing(cls, m: QuadTreeModel) -> "BranchProbabilities":
        """g = 1 on the inner nodes of m and 0 elsewhere: p(m) = 1."""
        levels = [np.zeros((1 << i, 1 << i)) for i in range(m.d_max + 1)]
        for node in m.inner:
            levels[node.i][node.j0, node.j1] = 1.0
        return cls(levels)

    def __getitem__(self, s: NodeId) -> float:
        return float(self.levels[s.i][s.j0, s.j1])

    def as_constant(self) -> Union[float, None]:
        """The shared value when every node above d_max has the same g, else None."""
        upper = [level.ravel() for level in self.levels[:-1]]
        if not upper:
            return 0.0
        values = np.unique(np.concatenate(upper))
        return float(values[0]) if values.size == 1 else None


def _log(p: float) -> float:
    return float(np.log(p)) if p > 0.0 else -np.inf


def _log1m(p: float) -> float:
    return float(np.log1p(-p)) if p < 1.0 else -np.inf


def log_prior_probability(m: QuadTreeModel, g: BranchProbabilities) -> float:
    if m.d_max != g.d_max:
        raise DomainError(f"model has d_max={m.d_max}, branch probabilities have d_max={g.d_max}")
    total = sum(_log1m(g[s]) for s in m.leaves)
    total += sum(_log(g[s]) for s in m.inner)
    return total


def prior_probability(m: QuadTreeModel, g: BranchProbabilities) -> float:
    """p(m), computed in the log domain."""
    return float(np.exp(log_prior_probability(m, g)))


def sample_model(g: BranchProbabilities, rng: np.random.Generator) -> QuadTreeModel:
    """
    Draw m ~ p(m) top-down: each node expands with probability g_s.

    Nodes are visited depth-first in canonical child order, one uniform draw
    per visited node below d_max, so a seed fixes the result.
    """
    leaves, inner = set(), set()
    stack = [ROOT]
    while stack:
        node = stack.pop()
        if node.i < g.d_max and rng.random() < g[node]:
            inner.add(node)
            stack.extend(reversed(node.children()))
        else:
            leaves.add(node)
    return QuadTreeModel(frozenset(leaves), frozenset(inner), g.d_max)
