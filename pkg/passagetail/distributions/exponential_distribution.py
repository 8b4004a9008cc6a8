# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
# Component
from ..base import BaseDistribution
from ..types import ExponentialFamily


class ExponentialDistribution(BaseDistribution):
    def __init__(self, family :ExponentialFamily):
        self._mu = family.rate

    @property
    def rate(self) -> float:
        return self._mu

    def tail(self, y :float) -> float:
        return 1.0 if y <= 0 else math.exp(-self._mu * y)

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        return (self._mu * y, self._mu, 0.0) if y > 0 else (0.0, 0.0, 0.0)

    @property
    def mean(self) -> float:
        return 1.0 / self._mu

    @property
    def variance(self) -> float:
        return 1.0 / self._mu ** 2

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        return 2.0 / self._mu ** 3, 6.0 / self._mu ** 4

    @property
    def mgf_domain_sup(self) -> float:
        return self._mu

    def mgf(self, s :float) -> Tuple[float, float, float]:
        if self._outside_domain(s):
            return math.inf, math.inf, math.inf
        gap = self._mu - s
        return self._mu / gap, self._mu / gap ** 2, 2.0 * self._mu / gap ** 3

    def _exp_weighted_tail(self, s :float, y :float) -> float:
        return math.exp((s - self._mu) * y) if y > 0 else math.exp(s * y)

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return rng.exponential(1.0 / self._mu, size)

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        # Tilted exponential is exponential with rate mu - s
        return rng.exponential(1.0 / (self._mu - s), size)

    def sample_equilibrium(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return self.sample(rng, size)
