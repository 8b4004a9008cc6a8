# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
from scipy import special, stats
# Component
from ..base import BaseDistribution
from ..types import WeibullLike


class WeibullDistribution(BaseDistribution):
    """Tail exp(-c y^beta), beta in (0, 1): g(y) = c y^beta."""

    def __init__(self, family :WeibullLike):
        self._beta = family.shape
        self._c = family.rate
        self._frozen = stats.weibull_min(c = family.shape, scale = family.rate ** (-1.0 / family.shape))

    @property
    def shape(self) -> float:
        return self._beta

    @property
    def rate(self) -> float:
        return self._c

    def tail(self, y :float) -> float:
        return 1.0 if y <= 0 else math.exp(-self._c * y ** self._beta)

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        if y <= 0:
            return 0.0, 0.0, 0.0
        beta, c = self._beta, self._c
        return c * y ** beta, c * beta * y ** (beta - 1.0), c * beta * (beta - 1.0) * y ** (beta - 2.0)

    @property
    def mean(self) -> float:
        return float(self._frozen.mean())

    @property
    def variance(self) -> float:
        return float(self._frozen.var())

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        skew, kurt = self._frozen.stats(moments = "sk")
        return float(skew) * self.variance ** 1.5, float(kurt) * self.variance ** 2

    @property
    def mgf_domain_sup(self) -> float:
        return 0.0

    def mgf(self, s :float) -> Tuple[float, float, float]:
        if s > 0:
            return math.inf, math.inf, math.inf
        return 1.0, self.mean, self.variance + self.mean ** 2

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return self._frozen.rvs(size = size, random_state = rng)

    def sample_equilibrium(self, rng :np.random.Generator, size :int) -> np.ndarray:
        # Integrated tail: P(1/beta, c z^beta) with P the regularised lower incomplete gamma
        u = rng.random(size)
        return (special.gammaincinv(1.0 / self._beta, u) / self._c) ** (1.0 / self._beta)
