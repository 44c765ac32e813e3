"""
results.py

Result tables, model bit-strings and coefficient files.

A model is written as its preorder bit-string over the nodes it contains,
children in canonical order: 1 for an inner node, 0 for a leaf. The
root-only tree is "0"; the complete depth-1 tree is "10000".

Coefficient files are CSV with header node,k0,k1,value and one row per
coefficient of each leaf block, node keyed "i/j0/j1".
"""

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np

from tree.quadtree import QuadTreeModel
from utils.errors import DomainError, ParseError, SignalIOError
from wavelet.nodes import NodeId, ROOT

COEFFICIENT_HEADER = ("node", "k0", "k1", "value")


def serialize_model(m: QuadTreeModel) -> str:
    return "".join("1" if node in m.inner else "0" for node in m.preorder())


def parse_model(bits: str, d_max: int) -> QuadTreeModel:
    bits = bits.strip()
    if not bits or set(bits) - {"0", "1"}:
        raise DomainError(f"model bit-string must consist of 0 and 1, got {bits!r}")
    leaves, inner = set(), set()
    position = 0
    stack = [ROOT]
    while stack:
        node = stack.pop()
        if position >= len(bits):
            raise DomainError(f"model bit-string {bits!r} ends early at node {node.key}")
        bit = bits[position]
        position += 1
        if bit == "1":
            if node.i >= d_max:
                raise DomainError(f"model bit-string {bits!r} expands node {node.key} at depth d_max={d_max}")
            inner.add(node)
            stack.extend(reversed(node.children()))
        else:
            leaves.add(node)
    if position != len(bits):
        raise DomainError(f"model bit-string {bits!r} has {len(bits) - position} trailing bits")
    return QuadTreeModel(frozenset(leaves), frozenset(inner), d_max)


def write_results_csv(rows: Sequence[Mapping], path, fieldnames: Sequence[str] = None) -> Path:
    """Write dict rows as CSV with a header; columns default to the first row's keys."""
    path = Path(path)
    if fieldnames is None:
        if not rows:
            raise DomainError(f"{path}: no rows and no header given")
        fieldnames = list(rows[0].keys())
    try:
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _cell(v) for k, v in row.items()})
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    return path


def read_results_csv(path) -> List[Dict[str, str]]:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            return list(csv.DictReader(f))
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_coefficients(path, m: QuadTreeModel, coeffs) -> Path:
    rows = []
    for leaf in m.leaf_order():
        block = np.asarray(coeffs[leaf])
        for k0 in range(block.shape[0]):
            for k1 in range(block.shape[1]):
                rows.append({"node": leaf.key, "k0": k0, "k1": k1, "value": float(block[k0, k1])})
    return write_results_csv(rows, path, COEFFICIENT_HEADER)


def read_coefficients(path, d_max: int) -> Dict[NodeId, np.ndarray]:
    """Leaf blocks from a coefficient file; every block must be complete."""
    path = Path(path)
    side = 1 << d_max
    blocks: Dict[NodeId, np.ndarray] = {}
    filled: Dict[NodeId, np.ndarray] = {}
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != COEFFICIENT_HEADER:
                raise ParseError(f"expected header {','.join(COEFFICIENT_HEADER)}", path, 1, 1)
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 4:
                    raise ParseError(f"expected 4 fields, got {len(row)}", path, line_no, 1)
                try:
                    node = NodeId.parse(row[0]).validate(d_max)
                except DomainError as e:
                    raise ParseError(str(e), path, line_no, 1) from None
                span = side >> node.i
                try:
                    k0, k1, value = int(row[1]), int(row[2]), float(row[3])
                except ValueError:
                    raise ParseError("expected integer shifts and a numeric value", path, line_no, 2) from None
                if not (0 <= k0 < span and 0 <= k1 < span):
                    raise ParseError(f"shift ({k0}, {k1}) outside block of side {span}", path, line_no, 2)
                if node not in blocks:
                    blocks[node] = np.zeros((span, span))
                    filled[node] = np.zeros((span, span), dtype=bool)
                blocks[node][k0, k1] = value
                filled[node][k0, k1] = True
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    for node, mask in filled.items():
        if not mask.all():
            raise ParseError(f"block of node {node.key} is incomplete", path)
    if not blocks:
        raise ParseError("no coefficients found", path)
    return blocks


def models_table(models: Iterable[QuadTreeModel], values: Sequence[float], column: str) -> List[dict]:
    return [
        {"index": index, "model": serialize_model(m), column: float(v)}
        for index, (m, v) in enumerate(zip(models, values))
    ]
