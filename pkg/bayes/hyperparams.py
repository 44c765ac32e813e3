from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from tree.prior import BranchProbabilities
from utils.errors import DomainError
from wavelet.packets import PacketTable

# Experiment defaults
DEFAULT_SIGMA2 = 10.0
DEFAULT_NOISE_SIGMA2 = 4.0
DEFAULT_BRANCH_PROBABILITY = 0.5
DEFAULT_MU_SCALE = 16.0


@dataclass(frozen=True)
class HyperParams:
    """
    Known hyperparameters of the generative model.

    g:            branch probabilities of the tree prior
    mu:           per-node prior means mu_s of theta; mu^m is the
                  concatenation of m's leaf blocks (zeros if not given)
    sigma2:       prior variance of every coefficient, > 0
    noise_sigma2: variance of the additive pixel noise, >= 0
    """

    g: BranchProbabilities
    sigma2: float
    noise_sigma2: float
    mu: Optional[PacketTable] = field(default=None)

    def __post_init__(self):
        if self.mu is None:
            object.__setattr__(self, "mu", PacketTable.zeros(self.g.d_max))
        if self.mu.d_max != self.g.d_max:
            raise DomainError(f"mu has d_max={self.mu.d_max}, g has d_max={self.g.d_max}")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0.0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not np.isfinite(self.noise_sigma2) or self.noise_sigma2 < 0.0:
            raise DomainError(f"noise_sigma2 must be non-negative, got {self.noise_sigma2}")
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "noise_sigma2", float(self.noise_sigma2))

    @property
    def d_max(self) -> int:
        return self.g.d_max

    @property
    def side(self) -> int:
        return 1 << self.g.d_max

    @property
    def total_variance(self) -> float:
        return self.sigma2 + self.noise_sigma2

    @property
    def shrinkage(self) -> float:
        """a = sigma^2 / (sigma^2 + sigma_eps^2), the weight on the observation."""
        return self.sigma2 / self.total_variance

    @property
    def posterior_variance(self) -> float:
        """sigma~^2 = sigma^2 sigma_eps^2 / (sigma^2 + sigma_eps^2)."""
        return self.sigma2 * self.noise_sigma2 / self.total_variance

    def replace(self, **changes) -> "HyperParams":
        values = {"g": self.g, "sigma2": self.sigma2, "noise_sigma2": self.noise_sigma2, "mu": self.mu}
        values.update(changes)
        return HyperParams(**values)


def synthetic_mu(d_max: int, scale: float = DEFAULT_MU_SCALE) -> PacketTable:
    """
    Prior means with every node block constant at scale * 2^{-i(s)}.

    Used when no corpus is given; parents and their synthesized children
    differ, so the tree structure stays identifiable from data.
    """
    side = 1 << d_max
    return PacketTable([
        np.full((1 << i, 1 << i, side >> i, side >> i), scale * 2.0 ** -i) for i in range(d_max + 1)
    ])
