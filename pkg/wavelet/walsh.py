"""
walsh.py

The Walsh (Haar-filter) wavelet packet functions and the 2D basis
signals built from them. Only tests and the brute-force oracle build
basis signals explicitly; the fast paths live in packets.py.
"""

from functools import lru_cache

import numpy as np

from utils.errors import DomainError
from wavelet.nodes import NodeId

INV_SQRT2 = 2.0 ** -0.5


@lru_cache(maxsize=None)
def _filter_taps(i: int, j: int) -> np.ndarray:
    taps = np.ones(1)
    # bits of j are consumed most significant first: w_{t+1, 2j+b} is built from w_{t, j}
    for t in range(i):
        bit = (j >> (i - 1 - t)) & 1
        sign = -1.0 if bit else 1.0
        taps = np.concatenate([taps, sign * taps]) * INV_SQRT2
    taps.setflags(write=False)
    return taps


def walsh_filter(i: int, j: int) -> np.ndarray:
    """Support of w_{i,j} on {0, ..., 2^i - 1} as a read-only vector."""
    if i < 0:
        raise DomainError(f"filter depth must be non-negative, got {i}")
    if not 0 <= j < (1 << i):
        raise DomainError(f"filter index j={j} outside [0, {(1 << i) - 1}] at depth {i}")
    return _filter_taps(i, j)


def walsh_filter_value(i: int, j: int, n: int, d_max: int = None) -> float:
    """
    Evaluate w_{i,j}(n).

    w_{0,0} is the unit impulse and
    w_{i+1,2j}(n)   = 2^{-1/2} (w_{i,j}(n) + w_{i,j}(n - 2^i)),
    w_{i+1,2j+1}(n) = 2^{-1/2} (w_{i,j}(n) - w_{i,j}(n - 2^i)).
    Outside {0, ..., 2^i - 1} the value is zero.
    """
    if d_max is not None and i > d_max:
        raise DomainError(f"filter depth {i} exceeds d_max={d_max}")
    taps = walsh_filter(i, j)
    if 0 <= n < taps.size:
        return float(taps[n])
    return 0.0


def basis_vector(s: NodeId, k0: int, k1: int, d_max: int) -> np.ndarray:
    """
    The L x L basis signal W_{i,j0,j1,k0,k1}.

    Entry (n0, n1) is w_{i,j0}(n0 - 2^i k0) * w_{i,j1}(n1 - 2^i k1); indices
    run over {0, ..., L - 1}.
    """
    s.validate(d_max)
    side = s.block_side(d_max)
    if not (0 <= k0 < side and 0 <= k1 < side):
        raise DomainError(f"shift ({k0}, {k1}) outside [0, {side - 1}] for node {s.key}")
    span = 1 << s.i
    signal = np.zeros((1 << d_max, 1 << d_max))
    signal[span * k0:span * (k0 + 1), span * k1:span * (k1 + 1)] = np.outer(
        walsh_filter(s.i, s.j0), walsh_filter(s.i, s.j1)
    )
    return signal
