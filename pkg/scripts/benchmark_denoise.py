import sys
import timeit
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from bayes.denoise import bayes_denoise  # noqa: E402
from bayes.hyperparams import HyperParams, synthetic_mu  # noqa: E402
from tree.prior import BranchProbabilities  # noqa: E402


def best_time(d_max: int, repeats: int = 7, calls: int = 10, seed: int = 0) -> float:
    """Per-call time of Bayes-optimal denoising on a random 2^d_max square, best of `repeats` batches."""
    hp = HyperParams(g=BranchProbabilities.constant(d_max, 0.5), sigma2=10.0, noise_sigma2=4.0,
                     mu=synthetic_mu(d_max))
    y = np.random.default_rng(seed).uniform(0.0, 255.0, size=(hp.side, hp.side))
    return min(timeit.repeat(lambda: bayes_denoise(y, hp), number=calls, repeat=repeats)) / calls


if __name__ == "__main__":
    small, large = best_time(7), best_time(8)
    print(f"128x128: {small * 1e3:.1f} ms")
    print(f"256x256: {large * 1e3:.1f} ms")
    print(f"ratio:   {large / small:.2f} (expected 3-6 for O(L^2 d_max))")
