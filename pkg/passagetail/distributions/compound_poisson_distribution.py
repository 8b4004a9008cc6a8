# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
# Component
from ..base import BaseDistribution


class CompoundPoissonDistribution(BaseDistribution):
    """
    Unit-time increment X_1 = B_1 + ... + B_N - 1 of a compound Poisson process with
    unit drain, N Poisson(arrival_rate). The tail is reported by its asymptote
    min(1, arrival_rate * P(B > y)), which is the quantity the heavy-tailed formulas need.
    """

    def __init__(self,
                 arrival_rate :float,
                 service :BaseDistribution):
        self._lam = arrival_rate
        self._service = service

    @property
    def arrival_rate(self) -> float:
        return self._lam

    @property
    def service(self) -> BaseDistribution:
        return self._service

    @property
    def tilt_rate(self) -> Optional[float]:
        return self._service.tilt_rate

    def tail(self, y :float) -> float:
        return min(1.0, self._lam * self._service.tail(y))

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        g, g1, g2 = self._service.log_tail(y)
        if g - math.log(self._lam) <= 0:
            return 0.0, 0.0, 0.0
        return g - math.log(self._lam), g1, g2

    def mgf(self, s :float) -> Tuple[float, float, float]:
        mb, mb1, mb2 = self._service.mgf(s)
        if not math.isfinite(mb):
            return math.inf, math.inf, math.inf
        m = math.exp(self._lam * (mb - 1.0) - s)
        drift = self._lam * mb1 - 1.0
        return m, m * drift, m * (drift ** 2 + self._lam * mb2)

    @property
    def mean(self) -> float:
        return self._lam * self._service.mean - 1.0

    @property
    def variance(self) -> float:
        return self._lam * self._service.raw_moments()[1]

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        # Cumulants of a compound Poisson sum are arrival_rate times raw moments of B
        _, _, m3, m4 = self._service.raw_moments()
        k3 = self._lam * m3 if math.isfinite(m3) else None
        k4 = self._lam * m4 if math.isfinite(m4) else None
        return k3, k4

    @property
    def mgf_domain_sup(self) -> float:
        return self._service.mgf_domain_sup

    @property
    def mgf_sup_attained(self) -> bool:
        return self._service.mgf_sup_attained

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return self._sum_of_jobs(rng, size, self._lam, lambda total: self._service.sample(rng, total))

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        """Tilted law: arrival rate arrival_rate * m_B(s), services from the s-tilted law of B."""
        rate = self._lam * self._service.mgf_value(s)
        return self._sum_of_jobs(rng, size, rate, lambda total: self._service.tilted_sample(rng, total, s))

    @staticmethod
    def _sum_of_jobs(rng :np.random.Generator, size :int, rate :float, draw) -> np.ndarray:
        counts = rng.poisson(rate, size)
        jobs = draw(int(counts.sum()))
        owners = np.repeat(np.arange(size), counts)
        return np.bincount(owners, weights = jobs, minlength = size) - 1.0
