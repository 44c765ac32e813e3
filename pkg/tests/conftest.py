import numpy as np
import pytest

from bayes.hyperparams import HyperParams
from tree.prior import BranchProbabilities
from wavelet.packets import PacketTable


def random_hyperparams(rng: np.random.Generator, d_max: int, mu_scale: float = 3.0) -> HyperParams:
    """Per-node g in (0.05, 0.95), random mu blocks, random variances."""
    side = 1 << d_max
    g_levels = [rng.uniform(0.05, 0.95, size=(1 << i, 1 << i)) for i in range(d_max)]
    g_levels.append(np.zeros((side, side)))
    mu = PacketTable([
        mu_scale * rng.standard_normal((1 << i, 1 << i, side >> i, side >> i)) for i in range(d_max + 1)
    ])
    return HyperParams(
        g=BranchProbabilities(g_levels),
        sigma2=float(rng.uniform(1.0, 20.0)),
        noise_sigma2=float(rng.uniform(0.5, 10.0)),
        mu=mu,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def default_hyperparams():
    """d_max=2, g=0.5, sigma2=10, noise_sigma2=4, zero mu."""
    return HyperParams(g=BranchProbabilities.constant(2, 0.5), sigma2=10.0, noise_sigma2=4.0)


@pytest.fixture
def make_hyperparams():
    return random_hyperparams
