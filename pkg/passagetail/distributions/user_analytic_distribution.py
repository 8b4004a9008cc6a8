# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
# Component
from ..base import BaseDistribution
from ..types import UserAnalytic

# Params
_INVERSION_TOL = 1e-12
_INVERSION_MAX_STEPS = 200


class UserAnalyticDistribution(BaseDistribution):
    """Nonnegative law given by user callables; moments and mgf come from tail quadrature."""

    def __init__(self, family :UserAnalytic, quad_rel_tol :Optional[float] = None):
        self._family = family
        if quad_rel_tol is not None:
            self.quad_rel_tol = quad_rel_tol
        self._raw = tuple(self._tail_moment(order) for order in range(1, 5))

    @property
    def declared_beta(self) -> Optional[float]:
        return self._family.declared_beta

    def tail(self, y :float) -> float:
        return 1.0 if y <= 0 else float(self._family.tail(y))

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        if y <= 0:
            return 0.0, 0.0, 0.0
        return float(self._family.log_tail(y)), float(self._family.log_tail_prime(y)), float(self._family.log_tail_second(y))

    @property
    def mean(self) -> float:
        return self._raw[0]

    @property
    def variance(self) -> float:
        return self._raw[1] - self._raw[0] ** 2

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        _, _, k3, k4 = self._cumulants_from_raw(*self._raw)
        return k3, k4

    @property
    def mgf_domain_sup(self) -> float:
        return self._family.mgf_domain_sup

    def mgf(self, s :float) -> Tuple[float, float, float]:
        if s > 0 and s >= self.mgf_domain_sup:
            return math.inf, math.inf, math.inf
        return self._quadrature_mgf(s)

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        """Inverse-tail sampling by vectorised bisection."""
        tail = np.vectorize(self.tail, otypes = [float])
        u = rng.random(size)
        lo = np.zeros(size)
        hi = np.ones(size)
        # Grow the upper bracket until tail(hi) <= u
        for _ in range(_INVERSION_MAX_STEPS):
            open_ = tail(hi) > u
            if not open_.any():
                break
            hi[open_] *= 2.0
        for _ in range(_INVERSION_MAX_STEPS):
            mid = 0.5 * (lo + hi)
            above = tail(mid) > u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= _INVERSION_TOL * np.maximum(1.0, hi)):
                break
        return 0.5 * (lo + hi)
