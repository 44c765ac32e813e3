"""
quadtree.py

Full quadtrees m (each node has four children or none) rooted at (0,0,0)
inside the complete quadtree of depth d_max. A model fixes one packet
basis: its leaves are the subspaces the signal is expanded in.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import FrozenSet, Iterable, List, Tuple

import numpy as np

from utils.errors import DomainError
from wavelet.nodes import NodeId, ROOT

MAX_ENUMERATION_DEPTH = 3


@dataclass(frozen=True)
class QuadTreeModel:
    """A full quadtree given by its leaf set L^m and inner set I^m."""

    leaves: FrozenSet[NodeId]
    inner: FrozenSet[NodeId]
    d_max: int

    def __post_init__(self):
        object.__setattr__(self, "leaves", frozenset(NodeId(*n) for n in self.leaves))
        object.__setattr__(self, "inner", frozenset(NodeId(*n) for n in self.inner))
        if self.d_max < 0:
            raise DomainError(f"d_max must be non-negative, got {self.d_max}")
        if self.leaves & self.inner:
            raise DomainError("a node cannot be both a leaf and an inner node")
        for node in self.leaves | self.inner:
            node.validate(self.d_max)
        if ROOT not in self.leaves and ROOT not in self.inner:
            raise DomainError("model does not contain the root")
        for node in self.inner:
            if node.i == self.d_max:
                raise DomainError(f"node {node.key} at depth d_max cannot be inner")
            for child in node.children():
                if child not in self.leaves and child not in self.inner:
                    raise DomainError(f"inner node {node.key} is missing child {child.key}")
        for node in self.leaves | self.inner:
            if node != ROOT and node.parent() not in self.inner:
                raise DomainError(f"parent of node {node.key} is not an inner node")

    @classmethod
    def root_only(cls, d_max: int) -> "QuadTreeModel":
        return cls(frozenset([ROOT]), frozenset(), d_max)

    @classmethod
    def from_leaves(cls, leaves: Iterable[NodeId], d_max: int) -> "QuadTreeModel":
        """Rebuild a model from its leaves; inner nodes are their strict ancestors."""
        leaves = frozenset(NodeId(*n) for n in leaves)
        if not leaves:
            raise DomainError("a model needs at least one leaf")
        inner = frozenset(a for leaf in leaves for a in leaf.ancestors())
        model = cls(leaves, inner, d_max)
        # the leaves must tile the root exactly: 4^{-i} fractions sum to one
        if sum(4.0 ** -leaf.i for leaf in leaves) != 1.0:
            raise DomainError("leaves do not form a full quadtree")
        return model

    @cached_property
    def depth(self) -> int:
        """Depth of the deepest leaf."""
        return max(node.i for node in self.leaves)

    def contains(self, node: NodeId) -> bool:
        return node in self.leaves or node in self.inner

    def preorder(self) -> List[NodeId]:
        """Nodes of m in depth-first order, children in canonical order."""
        order = []
        stack = [ROOT]
        while stack:
            node = stack.pop()
            order.append(node)
            if node in self.inner:
                stack.extend(reversed(node.children()))
        return order

    def leaf_order(self) -> List[NodeId]:
        return [node for node in self.preorder() if node in self.leaves]

    def level_masks(self) -> Tuple[Tuple[np.ndarray, ...], Tuple[np.ndarray, ...]]:
        """Per-depth boolean maps (2^i x 2^i) of leaves and inner nodes."""
        leaf_masks = [np.zeros((1 << i, 1 << i), dtype=bool) for i in range(self.d_max + 1)]
        inner_masks = [np.zeros((1 << i, 1 << i), dtype=bool) for i in range(self.d_max + 1)]
        for node in self.leaves:
            leaf_masks[node.i][node.j0, node.j1] = True
        for node in self.inner:
            inner_masks[node.i][node.j0, node.j1] = True
        return tuple(leaf_masks), tuple(inner_masks)

    def __repr__(self) -> str:
        bits = "".join("1" if node in self.inner else "0" for node in self.preorder())
        return f"QuadTreeModel(d_max={self.d_max}, bits={bits!r})"


def _subtrees(node: NodeId, d_max: int) -> List[Tuple[FrozenSet[NodeId], FrozenSet[NodeId]]]:
    options = [(frozenset([node]), frozenset())]
    if node.i == d_max:
        return options
    per_child = [_subtrees(child, d_max) for child in node.children()]
    for combo in product(*per_child):
        leaves = frozenset().union(*(c[0] for c in combo))
        inner = frozenset([node]).union(*(c[1] for c in combo))
        options.append((leaves, inner))
    return options


def enumerate_models(d_max: int) -> List[QuadTreeModel]:
    """
    Every full quadtree of depth at most d_max.

    Order is depth-first: the root-only tree first, then the expanded root
    with the children's options combined in canonical child order, the
    first child varying slowest. The count follows T(d) = 1 + T(d-1)^4.
    """
    if d_max < 0:
        raise DomainError(f"d_max must be non-negative, got {d_max}")
    if d_max > MAX_ENUMERATION_DEPTH:
        raise DomainError(
            f"refusing to enumerate models for d_max={d_max}; exhaustive enumeration "
            f"is limited to d_max <= {MAX_ENUMERATION_DEPTH}"
        )
    return [QuadTreeModel(leaves, inner, d_max) for leaves, inner in _subtrees(ROOT, d_max)]


def perfect_tree(depth: int, d_max: int) -> QuadTreeModel:
    """The complete tree whose leaves all sit at `depth`."""
    if not 0 <= depth <= d_max:
        raise DomainError(f"perfect tree depth {depth} outside [0, {d_max}]")
    width = 1 << depth
    leaves = frozenset(NodeId(depth, j0, j1) for j0 in range(width) for j1 in range(width))
    inner = frozenset(
        NodeId(i, j0, j1) for i in range(depth) for j0 in range(1 << i) for j1 in range(1 << i)
    )
    return QuadTreeModel(leaves, inner, d_max)


def average_depth(m: QuadTreeModel) -> float:
    """Mean leaf depth (1/|L^m|) sum_{s in L^m} i(s)."""
    return sum(node.i for node in m.leaves) / len(m.leaves)


class ModelCatalog:
    """
    All models of a small d_max with node-indicator matrices, so that
    per-model log products over leaves and inner nodes can be evaluated
    for every model at once.

    Column order of the indicator matrices is the flattened per-depth
    node order (depth 0 first, then row-major over (j0, j1)).
    """

    def __init__(self, d_max: int):
        self.d_max = d_max
        self.models = enumerate_models(d_max)
        n_nodes = sum(4 ** i for i in range(d_max + 1))
        self.leaf_indicator = np.zeros((len(self.models), n_nodes), dtype=bool)
        self.inner_indicator = np.zeros((len(self.models), n_nodes), dtype=bool)
        for row, model in enumerate(self.models):
            for node in model.leaves:
                self.leaf_indicator[row, flat_index(node)] = True
            for node in model.inner:
                self.inner_indicator[row, flat_index(node)] = True

    def __len__(self) -> int:
        return len(self.models)

    def index_of(self, m: QuadTreeModel) -> int:
        return self.models.index(m)

    def log_products(self, log_leaf_factor: np.ndarray, log_inner_factor: np.ndarray) -> np.ndarray:
        """sum_{L^m} log_leaf_factor + sum_{I^m} log_inner_factor for every model."""
        with np.errstate(invalid="ignore"):
            leaf_part = np.where(self.leaf_indicator, log_leaf_factor[None, :], 0.0).sum(axis=1)
            inner_part = np.where(self.inner_indicator, log_inner_factor[None, :], 0.0).sum(axis=1)
        return leaf_part + inner_part

    def log_prior(self, g) -> np.ndarray:
        """ln p(m) for every model, given branch probabilities g."""
        flat = flatten_levels(g.levels)
        with np.errstate(divide="ignore"):
            return self.log_products(np.log1p(-flat), np.log(flat))

    def neighbours(self, m: QuadTreeModel) -> Tuple[List[int], List[int]]:
        """Indices of models one expansion away and one contraction away from m."""
        expanded, contracted = [], []
        for index, other in enumerate(self.models):
            if other.inner > m.inner and len(other.inner - m.inner) == 1:
                expanded.append(index)
            elif other.inner < m.inner and len(m.inner - other.inner) == 1:
                contracted.append(index)
        return expanded, contracted


def flat_index(node: NodeId) -> int:
    """Position of a node in the concatenation of row-major depth maps."""
    offset = (4 ** node.i - 1) // 3
    return offset + node.j0 * (1 << node.i) + node.j1


def flatten_levels(levels) -> np.ndarray:
    return np.concatenate([np.asarray(level).ravel() for level in levels])
