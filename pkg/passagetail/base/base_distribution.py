# Typing
from typing import Callable, Optional, Tuple
# Numeric
import math, warnings
import numpy as np
from scipy import integrate
# Component
from ..exceptions import QuadratureFailure, TiltUnavailable

# DataType
Triple = Tuple[float, float, float]

# Params
_DEFAULT_QUAD_REL_TOL = 1e-10
_QUAD_FAILURE_TOL = 1e-6
_QUAD_LIMIT = 400


class BaseDistribution:
    """
    One-step law of a random variable. Families override the closed forms they know;
    the quadrature helpers below cover nonnegative laws described only by their tail.
    """
    # Relative tolerance of every tail quadrature
    quad_rel_tol = _DEFAULT_QUAD_REL_TOL

    @property
    def name(self) -> str:
        return type(self).__name__

    def tail(self, y :float) -> float:
        """P(Y > y)."""
        raise NotImplementedError()

    def log_tail(self, y :float) -> Triple:
        """g(y) = -ln P(Y > y) with g'(y) and g''(y)."""
        raise NotImplementedError()

    def mgf(self, s :float) -> Triple:
        """m(s), m'(s), m''(s); +inf outside the domain."""
        raise NotImplementedError()

    @property
    def mean(self) -> float:
        raise NotImplementedError()

    @property
    def variance(self) -> float:
        raise NotImplementedError()

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        """Third and fourth cumulants, None when infinite."""
        raise NotImplementedError()

    @property
    def mgf_domain_sup(self) -> float:
        """Supremum of s with m(s) finite."""
        raise NotImplementedError()

    @property
    def mgf_sup_attained(self) -> bool:
        """Whether m is finite at s = mgf_domain_sup itself."""
        return False

    @property
    def lattice_span(self) -> float:
        return 0.0

    @property
    def lattice_offset(self) -> float:
        return 0.0

    @property
    def tilt_rate(self) -> Optional[float]:
        """Exponential rate alpha of a tail exp(-alpha y) Gbar(y) with heavy Gbar, if any."""
        return None

    @property
    def breakpoint(self) -> float:
        """Point where the tail stops being identically one."""
        return 0.0

    @property
    def is_heavy(self) -> bool:
        return self.mgf_domain_sup == 0.0

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        raise NotImplementedError()

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        """Draws from e^{sy} F(dy) / m(s)."""
        raise TiltUnavailable(f"{self.name} has no sampler for its tilted law!")

    def sample_equilibrium(self, rng :np.random.Generator, size :int) -> np.ndarray:
        """Draws from the integrated-tail law with density tail(y)/mean on y >= 0."""
        raise TiltUnavailable(f"{self.name} has no equilibrium sampler!")

    def mgf_value(self, s :float) -> float:
        return self.mgf(s)[0]

    def raw_moments(self) -> Tuple[float, float, float, float]:
        """E Y, E Y^2, E Y^3, E Y^4 from mean, variance and cumulants."""
        mu, var = self.mean, self.variance
        k3, k4 = self.cumulants()
        m2 = var + mu ** 2
        m3 = math.inf if k3 is None else k3 + 3.0 * mu * var + mu ** 3
        m4 = math.inf if (k3 is None or k4 is None) else \
            k4 + 4.0 * k3 * mu + 3.0 * var ** 2 + 6.0 * var * mu ** 2 + mu ** 4
        return mu, m2, m3, m4

    def _exp_weighted_tail(self, s :float, y :float) -> float:
        """e^{sy} P(Y > y); families with exponential tails override it to avoid overflow."""
        tail = self.tail(y)
        return 0.0 if tail == 0.0 else math.exp(s * y) * tail

    def _quad(self,
              integrand,
              rel_tol :Optional[float] = None) -> float:
        """
        Integrate over [0, inf), split at the tail breakpoint.
        :param integrand: Function of y
        :type integrand: Callable[[float], float]
        :param rel_tol: Requested relative tolerance, quad_rel_tol when None
        :type rel_tol: Optional[float]
        :return: float
        """
        rel_tol = self.quad_rel_tol if rel_tol is None else rel_tol
        # Split at the breakpoint
        pieces = [(0.0, self.breakpoint), (self.breakpoint, math.inf)] if self.breakpoint > 0 else [(0.0, math.inf)]
        total, error = 0.0, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in pieces:
                value, err = integrate.quad(integrand, lo, hi, epsrel = rel_tol, epsabs = 0.0, limit = _QUAD_LIMIT)
                total += value
                error += err
        # Check the reported error
        if not math.isfinite(total) or error > _QUAD_FAILURE_TOL * max(1.0, abs(total)):
            raise QuadratureFailure(f"Quadrature for {self.name} reached error {error:.3e} on value {total:.6e}!")
        return total

    def _tail_moment(self, order :int) -> float:
        """E Y^order = order * int_0^inf y^{order-1} P(Y > y) dy for Y >= 0."""
        return order * self._quad(lambda y: y ** (order - 1) * self.tail(y))

    def _quadrature_mgf(self, s :float, rel_tol :Optional[float] = None) -> Triple:
        """
        Mgf of a nonnegative law from m(s) = 1 + s int e^{sy} P(Y > y) dy and its derivatives.
        :param s: Argument, 0 <= s <= mgf_domain_sup
        :type s: float
        :param rel_tol: Relative tolerance of every quadrature
        :type rel_tol: Optional[float]
        :return: Triple
        """
        i0 = self._quad(lambda y: self._exp_weighted_tail(s, y), rel_tol)
        i1 = self._quad(lambda y: y * self._exp_weighted_tail(s, y), rel_tol)
        i2 = self._quad(lambda y: y * y * self._exp_weighted_tail(s, y), rel_tol) if s > 0 else 0.0
        return 1.0 + s * i0, i0 + s * i1, 2.0 * i1 + s * i2

    def _outside_domain(self, s :float) -> bool:
        sup = self.mgf_domain_sup
        return s > sup or (s == sup and not self.mgf_sup_attained and s > 0)

    @staticmethod
    def _cumulants_from_raw(m1 :float, m2 :float, m3 :float, m4 :float) -> Tuple[float, float, float, float]:
        var = m2 - m1 ** 2
        k3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3
        k4 = m4 - 4.0 * m3 * m1 - 3.0 * m2 ** 2 + 12.0 * m2 * m1 ** 2 - 6.0 * m1 ** 4
        return m1, var, k3, k4
