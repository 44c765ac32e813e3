from pathlib import Path
from typing import List, Sequence

import numpy as np

from store.signals import read_signal
from utils.errors import DomainError, SignalIOError
from wavelet.packets import PacketTable, analyze_full, as_signal


def load_corpus(directory, d_max: int = None) -> List[np.ndarray]:
    """Every .pgm / .csv signal in a directory, in sorted file-name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SignalIOError(directory, "not a directory")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".pgm", ".csv"))
    if not paths:
        raise DomainError(f"{directory}: no .pgm or .csv signals found")
    return [read_signal(p, d_max=d_max) for p in paths]


def estimate_mu(corpus: Sequence, d_max: int) -> PacketTable:
    """
    Prior means from a corpus of images.

    Every entry of node s's block is the single value
    (1 / (N 4^{d_max - i(s)})) sum_n f(W_s x_n), where f sums all the
    coefficients of the block: the block mean of the coefficients,
    averaged over the corpus.
    """
    if len(corpus) == 0:
        raise DomainError("cannot estimate mu from an empty corpus")
    sums = None
    for x in corpus:
        table = analyze_full(as_signal(x, d_max))
        block_sums = [level.sum(axis=(2, 3)) for level in table.levels]
        sums = block_sums if sums is None else [a + b for a, b in zip(sums, block_sums)]

    side = 1 << d_max
    n_images = len(corpus)
    levels = []
    for i, total in enumerate(sums):
        value = total / (n_images * 4 ** (d_max - i))
        levels.append(np.broadcast_to(value[:, :, None, None], (1 << i, 1 << i, side >> i, side >> i)))
    return PacketTable(levels)
