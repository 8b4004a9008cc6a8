# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
from scipy import stats
# Component
from ..base import BaseDistribution
from ..types import LomaxLike, ParetoLike


class _PowerTail(BaseDistribution):
    """Shared moment bookkeeping of the power-tailed families, backed by a frozen scipy law."""

    def __init__(self, index :float, scale :float, frozen):
        self._p = index
        self._c = scale
        self._frozen = frozen

    @property
    def index(self) -> float:
        return self._p

    @property
    def mean(self) -> float:
        return float(self._frozen.mean())

    @property
    def variance(self) -> float:
        return float(self._frozen.var()) if self._p > 2 else math.inf

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        var = self.variance
        k3 = float(self._frozen.stats(moments = "s")) * var ** 1.5 if self._p > 3 else None
        k4 = float(self._frozen.stats(moments = "k")) * var ** 2 if self._p > 4 else None
        return k3, k4

    @property
    def mgf_domain_sup(self) -> float:
        return 0.0

    def mgf(self, s :float) -> Tuple[float, float, float]:
        if s > 0:
            return math.inf, math.inf, math.inf
        return 1.0, self.mean, self.variance + self.mean ** 2

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return self._frozen.rvs(size = size, random_state = rng)


class ParetoDistribution(_PowerTail):
    """Tail (y/c)^{-p} on [c, inf)."""

    def __init__(self, family :ParetoLike):
        super().__init__(index = family.index,
                         scale = family.scale,
                         frozen = stats.pareto(b = family.index, scale = family.scale))

    @property
    def breakpoint(self) -> float:
        return self._c

    def tail(self, y :float) -> float:
        return 1.0 if y < self._c else (y / self._c) ** (-self._p)

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        if y <= self._c:
            return 0.0, 0.0, 0.0
        return self._p * math.log(y / self._c), self._p / y, -self._p / (y * y)

    def sample_equilibrium(self, rng :np.random.Generator, size :int) -> np.ndarray:
        # Integrated tail is linear on [0, c) and a power beyond
        p, c = self._p, self._c
        mean = p * c / (p - 1.0)
        u = rng.random(size) * mean
        power = np.clip(1.0 - (u - c) * (p - 1.0) / c, 1e-300, None)
        return np.where(u < c, u, c * power ** (1.0 / (1.0 - p)))


class LomaxDistribution(_PowerTail):
    """Tail (1 + y/c)^{-p} on [0, inf)."""

    def __init__(self, family :LomaxLike):
        super().__init__(index = family.index,
                         scale = family.scale,
                         frozen = stats.lomax(c = family.index, scale = family.scale))

    def tail(self, y :float) -> float:
        return 1.0 if y <= 0 else (1.0 + y / self._c) ** (-self._p)

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        if y <= 0:
            return 0.0, 0.0, 0.0
        return self._p * math.log1p(y / self._c), self._p / (self._c + y), -self._p / (self._c + y) ** 2

    def sample_equilibrium(self, rng :np.random.Generator, size :int) -> np.ndarray:
        # Integrated tail of Lomax(p, c) is Lomax(p - 1, c)
        return stats.lomax(c = self._p - 1.0, scale = self._c).rvs(size = size, random_state = rng)
