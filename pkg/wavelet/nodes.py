"""
nodes.py

Node identifiers of the complete quadtree of depth d_max.

A node (i, j0, j1) indexes the packet subspace at depth i with frequency
indices j0 (rows) and j1 (columns). Its four children are
(i + 1, 2*j0 + b0, 2*j1 + b1), visited in the canonical order
(b0, b1) = (0,0), (0,1), (1,0), (1,1).
"""

from typing import Iterator, List, NamedTuple, Tuple

from utils.errors import DomainError

CHILD_OFFSETS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


class NodeId(NamedTuple):
    i: int
    j0: int
    j1: int

    def validate(self, d_max: int) -> "NodeId":
        if not 0 <= self.i <= d_max:
            raise DomainError(f"node depth {self.i} outside [0, {d_max}]")
        width = 1 << self.i
        if not (0 <= self.j0 < width and 0 <= self.j1 < width):
            raise DomainError(f"node {self.key} has frequency index outside [0, {width - 1}]")
        return self

    @property
    def key(self) -> str:
        """Text form "i/j0/j1" used in files."""
        return f"{self.i}/{self.j0}/{self.j1}"

    @classmethod
    def parse(cls, key: str) -> "NodeId":
        parts = key.strip().split("/")
        if len(parts) != 3:
            raise DomainError(f"node key {key!r} is not of the form i/j0/j1")
        try:
            i, j0, j1 = (int(p) for p in parts)
        except ValueError:
            raise DomainError(f"node key {key!r} is not of the form i/j0/j1") from None
        return cls(i, j0, j1)

    def children(self) -> List["NodeId"]:
        return [NodeId(self.i + 1, 2 * self.j0 + b0, 2 * self.j1 + b1) for b0, b1 in CHILD_OFFSETS]

    def parent(self) -> "NodeId":
        if self.i == 0:
            raise DomainError("the root has no parent")
        return NodeId(self.i - 1, self.j0 >> 1, self.j1 >> 1)

    def ancestors(self) -> List["NodeId"]:
        """An(s): every strict ancestor, nearest first."""
        found = []
        node = self
        while node.i > 0:
            node = node.parent()
            found.append(node)
        return found

    def block_side(self, d_max: int) -> int:
        return 1 << (d_max - self.i)


ROOT = NodeId(0, 0, 0)


def nodes_at_depth(i: int) -> Iterator[NodeId]:
    width = 1 << i
    for j0 in range(width):
        for j1 in range(width):
            yield NodeId(i, j0, j1)


def all_nodes(d_max: int) -> Iterator[NodeId]:
    """Every node of the complete quadtree, shallowest depth first."""
    for i in range(d_max + 1):
        yield from nodes_at_depth(i)
