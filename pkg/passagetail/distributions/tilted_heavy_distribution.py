# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
# Component
from ..base import BaseDistribution
from ..exceptions import TiltUnavailable, ModelError


class TiltedHeavyDistribution(BaseDistribution):
    """
    Nonnegative law with tail exp(-alpha y) * Gbar(y), Gbar the tail of a heavy base.
    Y has the law of min(E, W) with E exponential(alpha) and W from the base.
    """

    def __init__(self,
                 alpha :float,
                 base :BaseDistribution,
                 quad_rel_tol :Optional[float] = None):
        # Check the base
        if not base.is_heavy:
            raise ModelError(f"Base {base.name} of a tilted tail must be heavy!")
        self._alpha = alpha
        self._base = base
        if quad_rel_tol is not None:
            self.quad_rel_tol = quad_rel_tol
        # Moments by quadrature, computed once
        self._raw = tuple(self._tail_moment(order) for order in range(1, 5))

    @property
    def base(self) -> BaseDistribution:
        return self._base

    @property
    def tilt_rate(self) -> Optional[float]:
        return self._alpha

    @property
    def breakpoint(self) -> float:
        return self._base.breakpoint

    def tail(self, y :float) -> float:
        return 1.0 if y <= 0 else math.exp(-self._alpha * y) * self._base.tail(y)

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        if y <= 0:
            return 0.0, 0.0, 0.0
        g, g1, g2 = self._base.log_tail(y)
        return self._alpha * y + g, self._alpha + g1, g2

    def _exp_weighted_tail(self, s :float, y :float) -> float:
        return math.exp((s - self._alpha) * y) * self._base.tail(y) if y > 0 else 1.0

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
        return self._alpha

    @property
    def mgf_sup_attained(self) -> bool:
        return math.isfinite(self._base.mean)

    def mgf(self, s :float) -> Tuple[float, float, float]:
        if self._outside_domain(s):
            return math.inf, math.inf, math.inf
        return self._quadrature_mgf(s)

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return np.minimum(rng.exponential(1.0 / self._alpha, size), self._base.sample(rng, size))

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        """
        At s = alpha the tilted density (alpha Gbar + g_base) / m(alpha) mixes the base law
        (weight 1/m(alpha)) with its integrated-tail law.
        """
        if not math.isclose(s, self._alpha, rel_tol = 1e-12):
            raise TiltUnavailable(f"Tilted sampling of {self.name} is only available at s = alpha = {self._alpha}!")
        weight_base = 1.0 / (1.0 + self._alpha * self._base.mean)
        from_base = rng.random(size) < weight_base
        draws = self._base.sample_equilibrium(rng, size)
        draws[from_base] = self._base.sample(rng, int(from_base.sum()))
        return draws
