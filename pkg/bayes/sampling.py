import numpy as np

from bayes.hyperparams import HyperParams
from tree.quadtree import QuadTreeModel
from utils.errors import DomainError
from wavelet.packets import PacketTable, as_signal, synthesize_tree


def sample_theta(m: QuadTreeModel, hp: HyperParams, rng: np.random.Generator) -> PacketTable:
    """
    Draw theta_s ~ N(mu_s, sigma^2 I) for every node of the complete tree.

    Only the leaf blocks of m enter the signal; drawing all nodes keeps the
    number of generator calls independent of m.
    """
    if m.d_max != hp.d_max:
        raise DomainError(f"model has d_max={m.d_max}, hyperparameters have d_max={hp.d_max}")
    scale = np.sqrt(hp.sigma2)
    return PacketTable([mean + scale * rng.standard_normal(mean.shape) for mean in hp.mu.levels])


def sample_theta_and_signal(m: QuadTreeModel, hp: HyperParams, rng: np.random.Generator) -> np.ndarray:
    """x = (W^m)^T theta with theta ~ N(mu^m, sigma^2 I); x ~ N((W^m)^T mu^m, sigma^2 I)."""
    return synthesize_tree(m, sample_theta(m, hp, rng))


def add_noise(x, noise_sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """y = x + eps with eps i.i.d. N(0, noise_sigma2) per pixel."""
    signal = as_signal(x)
    if not np.isfinite(noise_sigma2) or noise_sigma2 < 0.0:
        raise DomainError(f"noise variance must be non-negative, got {noise_sigma2}")
    if noise_sigma2 == 0.0:
        return signal.copy()
    return signal + np.sqrt(noise_sigma2) * rng.standard_normal(signal.shape)
