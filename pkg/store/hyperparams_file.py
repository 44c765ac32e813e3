"""
hyperparams_file.py

JSON hyperparameter files.

    {
      "d_max": 2,
      "sigma2": 10.0,
      "noise_sigma2": 4.0,
      "g": 0.5,                              # or {"default": 0.5, "0/0/0": 0.9, ...}
      "mu": {"0/0/0": [[...], ...], "1/0/1": 2.5}   # optional
    }

`g` is one probability broadcast to every node above depth d_max, or an
object keyed "i/j0/j1" with an optional "default" (0 if absent). `mu`
blocks are row-major nested lists of shape (L/2^i, L/2^i), or a single
number for a constant block; nodes not listed have zero mean.
"""

import json
from pathlib import Path

import numpy as np

from bayes.hyperparams import HyperParams
from tree.prior import BranchProbabilities
from utils.errors import DomainError, ParseError, SignalIOError
from wavelet.nodes import NodeId
from wavelet.packets import PacketTable


def _require_number(data: dict, name: str, path) -> float:
    if name not in data:
        raise ParseError(f"missing field {name!r}", path)
    value = data[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {name!r} must be a number, got {value!r}", path)
    return float(value)


def parse_branch_probabilities(value, d_max: int, path=None) -> BranchProbabilities:
    try:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return BranchProbabilities.constant(d_max, float(value))
        if isinstance(value, dict):
            default = float(value.get("default", 0.0))
            entries = {NodeId.parse(k): float(v) for k, v in value.items() if k != "default"}
            return BranchProbabilities.from_mapping(d_max, entries, default)
    except (DomainError, TypeError, ValueError) as e:
        raise ParseError(f"invalid field 'g': {e}", path) from None
    raise ParseError(f"field 'g' must be a number or an object keyed i/j0/j1, got {type(value).__name__}", path)


def parse_mu(value, d_max: int, path=None) -> PacketTable:
    if value is None:
        return PacketTable.zeros(d_max)
    if not isinstance(value, dict):
        raise ParseError("field 'mu' must be an object keyed i/j0/j1", path)
    side = 1 << d_max
    blocks = {}
    try:
        for key, entry in value.items():
            node = NodeId.parse(key).validate(d_max)
            span = side >> node.i
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                blocks[node] = np.full((span, span), float(entry))
            else:
                blocks[node] = np.array(entry, dtype=np.float64)
        return PacketTable.from_blocks(blocks, d_max)
    except (DomainError, TypeError, ValueError) as e:
        raise ParseError(f"invalid field 'mu': {e}", path) from None


def hyperparams_from_dict(data: dict, path=None) -> HyperParams:
    if not isinstance(data, dict):
        raise ParseError("hyperparameter file must hold a JSON object", path)
    d_max = data.get("d_max")
    if isinstance(d_max, bool) or not isinstance(d_max, int) or d_max < 0:
        raise ParseError(f"field 'd_max' must be a non-negative integer, got {d_max!r}", path)
    sigma2 = _require_number(data, "sigma2", path)
    noise_sigma2 = _require_number(data, "noise_sigma2", path)
    g = parse_branch_probabilities(data.get("g", 0.0), d_max, path)
    mu = parse_mu(data.get("mu"), d_max, path)
    try:
        return HyperParams(g=g, sigma2=sigma2, noise_sigma2=noise_sigma2, mu=mu)
    except DomainError as e:
        raise ParseError(str(e), path) from None


def hyperparams_to_dict(hp: HyperParams) -> dict:
    constant = hp.g.as_constant()
    if constant is not None:
        g = constant
    else:
        g = {node.key: float(hp.g.levels[node.i][node.j0, node.j1])
             for node in hp.mu.nodes() if node.i < hp.d_max}
    mu = {node.key: hp.mu[node].tolist() for node in hp.mu.nodes() if np.any(hp.mu[node] != 0.0)}
    return {
        "d_max": hp.d_max,
        "sigma2": hp.sigma2,
        "noise_sigma2": hp.noise_sigma2,
        "g": g,
        "mu": mu,
    }


def read_hyperparams(path) -> HyperParams:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path, e.lineno, e.colno) from None
    return hyperparams_from_dict(data, path)


def write_hyperparams(path, hp: HyperParams) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(hyperparams_to_dict(hp), indent=2) + "\n")
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    return path
