"""
packets.py

Fast 2D Walsh packet analysis and synthesis in the coefficient domain.

Coefficients of all nodes at depth i are kept in one array shaped
(2^i, 2^i, L/2^i, L/2^i), indexed [j0, j1, k0, k1]. Entry [j0, j1, k0, k1]
is the inner product of the signal with W_{i,j0,j1,k0,k1}.

Substituting the filter recursion into the inner product gives the
butterfly used to go one level down. Along one axis, with c the parent
coefficients of that axis,

    child_low[k]  = 2^{-1/2} (c[2k] + c[2k+1])
    child_high[k] = 2^{-1/2} (c[2k] - c[2k+1])

The low child gets frequency index 2j, the high child 2j + 1. Axis 0
(k0) carries b0, axis 1 (k1) carries b1. One level costs O(L^2), a full
decomposition O(L^2 d_max).
"""

from typing import Iterator, List, Mapping, Optional, Sequence, Union

import numpy as np

from utils.errors import DomainError
from wavelet.nodes import NodeId
from wavelet.walsh import INV_SQRT2


def depth_of_side(side: int) -> int:
    """d_max for a square signal of the given side, which must be 2^d_max."""
    if side < 1 or side & (side - 1):
        raise DomainError(f"side must be a power of two, got {side}")
    return side.bit_length() - 1


def as_signal(x, d_max: Optional[int] = None) -> np.ndarray:
    """Validate a 2D signal: square, power-of-two side, finite values."""
    signal = np.asarray(x, dtype=np.float64)
    if signal.ndim != 2 or signal.shape[0] != signal.shape[1]:
        raise DomainError(f"signal must be a square matrix, got shape {signal.shape}")
    depth = depth_of_side(signal.shape[0])
    if d_max is not None and depth != d_max:
        raise DomainError(f"signal side {signal.shape[0]} does not match d_max={d_max} (side {1 << d_max})")
    if not np.all(np.isfinite(signal)):
        raise DomainError("signal contains non-finite values")
    return signal


def split_level(level: np.ndarray) -> np.ndarray:
    """All nodes of one depth -> all nodes of the next depth."""
    rows, cols, side, _ = level.shape
    if side < 2:
        raise DomainError("cannot split blocks of side 1")
    # axis 0: k0 halves, j0 doubles
    even, odd = level[:, :, 0::2, :], level[:, :, 1::2, :]
    stacked = np.stack([(even + odd) * INV_SQRT2, (even - odd) * INV_SQRT2], axis=1)
    level = stacked.reshape(2 * rows, cols, side // 2, side)
    # axis 1: k1 halves, j1 doubles
    even, odd = level[..., 0::2], level[..., 1::2]
    stacked = np.stack([(even + odd) * INV_SQRT2, (even - odd) * INV_SQRT2], axis=2)
    return stacked.reshape(2 * rows, 2 * cols, side // 2, side // 2)


def merge_level(level: np.ndarray) -> np.ndarray:
    """Exact inverse of split_level: children of one depth -> their parents."""
    rows, cols, side, _ = level.shape
    if rows % 2 or cols % 2:
        raise DomainError("children arrays must hold whole sibling groups")
    parent_rows, parent_cols = rows // 2, cols // 2

    grouped = level.reshape(rows, parent_cols, 2, side, side)
    low, high = grouped[:, :, 0], grouped[:, :, 1]
    merged = np.empty((rows, parent_cols, side, 2 * side))
    merged[..., 0::2] = (low + high) * INV_SQRT2
    merged[..., 1::2] = (low - high) * INV_SQRT2

    grouped = merged.reshape(parent_rows, 2, parent_cols, side, 2 * side)
    low, high = grouped[:, 0], grouped[:, 1]
    out = np.empty((parent_rows, parent_cols, 2 * side, 2 * side))
    out[:, :, 0::2, :] = (low + high) * INV_SQRT2
    out[:, :, 1::2, :] = (low - high) * INV_SQRT2
    return out


class PacketTable:
    """
    Coefficient blocks of every node of the complete quadtree.

    `levels[i]` has shape (2^i, 2^i, L/2^i, L/2^i). Tables are read-only
    once built; use `block(s)` or `table[s]` for one node.
    """

    def __init__(self, levels: Sequence[np.ndarray]):
        if not levels:
            raise DomainError("a packet table needs at least the root level")
        d_max = len(levels) - 1
        frozen = []
        for i, level in enumerate(levels):
            level = np.array(level, dtype=np.float64)
            expected = (1 << i, 1 << i, 1 << (d_max - i), 1 << (d_max - i))
            if level.shape != expected:
                raise DomainError(f"depth {i} coefficients have shape {level.shape}, expected {expected}")
            level.setflags(write=False)
            frozen.append(level)
        self.levels = tuple(frozen)
        self.d_max = d_max

    @property
    def side(self) -> int:
        return 1 << self.d_max

    def block(self, s: NodeId) -> np.ndarray:
        s.validate(self.d_max)
        return self.levels[s.i][s.j0, s.j1]

    def __getitem__(self, s: NodeId) -> np.ndarray:
        return self.block(s)

    def __contains__(self, s) -> bool:
        return isinstance(s, tuple) and len(s) == 3 and 0 <= s[0] <= self.d_max \
            and 0 <= s[1] < (1 << s[0]) and 0 <= s[2] < (1 << s[0])

    def nodes(self) -> Iterator[NodeId]:
        for i in range(self.d_max + 1):
            width = 1 << i
            for j0 in range(width):
                for j1 in range(width):
                    yield NodeId(i, j0, j1)

    @classmethod
    def zeros(cls, d_max: int) -> "PacketTable":
        side = 1 << d_max
        return cls([np.zeros((1 << i, 1 << i, side >> i, side >> i)) for i in range(d_max + 1)])

    @classmethod
    def from_blocks(cls, blocks: Mapping[NodeId, np.ndarray], d_max: int) -> "PacketTable":
        """Build a table from per-node blocks; absent nodes are zero."""
        side = 1 << d_max
        levels = [np.zeros((1 << i, 1 << i, side >> i, side >> i)) for i in range(d_max + 1)]
        for node, values in blocks.items():
            node = NodeId(*node).validate(d_max)
            values = np.asarray(values, dtype=np.float64)
            expected = (side >> node.i, side >> node.i)
            if values.shape != expected:
                raise DomainError(f"block for node {node.key} has shape {values.shape}, expected {expected}")
            levels[node.i][node.j0, node.j1] = values
        return cls(levels)

    def energy_by_depth(self) -> np.ndarray:
        return np.array([float(np.sum(level ** 2)) for level in self.levels])


def analyze_full(x) -> PacketTable:
    """Full packet decomposition of x down to blocks of side 1."""
    signal = as_signal(x)
    levels = [signal[np.newaxis, np.newaxis]]
    while levels[-1].shape[-1] > 1:
        levels.append(split_level(levels[-1]))
    return PacketTable(levels)


def analyze_level(x, depth: int) -> np.ndarray:
    """Coefficients of every node at one depth, shape (2^i, 2^i, L/2^i, L/2^i)."""
    signal = as_signal(x)
    if not 0 <= depth <= depth_of_side(signal.shape[0]):
        raise DomainError(f"depth {depth} outside the decomposition of a {signal.shape[0]}x{signal.shape[0]} signal")
    level = signal[np.newaxis, np.newaxis]
    for _ in range(depth):
        level = split_level(level)
    return level


def split_block(block) -> List[np.ndarray]:
    """The four child blocks of one parent block, canonical child order."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1] or block.shape[0] % 2:
        raise DomainError(f"block must be square with even side, got shape {block.shape}")
    children = split_level(block[np.newaxis, np.newaxis])
    return [children[b0, b1] for b0 in (0, 1) for b1 in (0, 1)]


def synthesize_one_level(child_blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Parent block from its four children given in canonical child order."""
    if len(child_blocks) != 4:
        raise DomainError(f"expected four child blocks, got {len(child_blocks)}")
    blocks = [np.asarray(b, dtype=np.float64) for b in child_blocks]
    shape = blocks[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(b.shape != shape for b in blocks):
        raise DomainError(f"child blocks must share one square shape, got {[b.shape for b in blocks]}")
    stacked = np.stack(blocks).reshape(2, 2, shape[0], shape[1])
    return merge_level(stacked)[0, 0]


Coefficients = Union[PacketTable, Mapping[NodeId, np.ndarray]]


def synthesize_tree(m, coeffs: Coefficients) -> np.ndarray:
    """
    Signal (W^m)^T theta from the leaf blocks of model m.

    Blocks of nodes that are not leaves of m are ignored. Works level by
    level from the deepest leaf upwards, so the cost is O(L^2 d_max).
    """
    if isinstance(coeffs, PacketTable):
        if coeffs.d_max != m.d_max:
            raise DomainError(f"coefficients have d_max={coeffs.d_max}, model has d_max={m.d_max}")
        table = coeffs
    else:
        missing = [node.key for node in m.leaves if node not in coeffs]
        if missing:
            raise DomainError(f"no coefficient block for leaves {sorted(missing)}")
        table = PacketTable.from_blocks({node: coeffs[node] for node in m.leaves}, m.d_max)

    leaf_masks, inner_masks = m.level_masks()
    acc = None
    for i in range(m.depth, -1, -1):
        level = np.where(leaf_masks[i][:, :, None, None], table.levels[i], 0.0)
        if acc is not None:
            level = level + np.where(inner_masks[i][:, :, None, None], merge_level(acc), 0.0)
        acc = level
    return acc[0, 0]
