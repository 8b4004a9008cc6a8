# Typing
from typing import Optional, Tuple
# Numeric
import math
import numpy as np
# Component
from ..base import BaseDistribution
from ..types import LatticePMF


class LatticeDistribution(BaseDistribution):
    """Finite law on the points span * offset; every quantity is a finite sum."""

    def __init__(self, family :LatticePMF):
        order = np.argsort(family.offsets)
        self._h = family.span
        self._offsets = np.asarray(family.offsets, dtype = np.int64)[order]
        self._masses = np.asarray(family.masses, dtype = np.float64)[order]
        self._values = self._h * self._offsets

    @property
    def span(self) -> float:
        return self._h

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def lattice_span(self) -> float:
        """Maximal span: h times the gcd of the offset differences."""
        diffs = np.diff(self._offsets)
        return self._h * (int(np.gcd.reduce(diffs)) if len(diffs) else 1)

    @property
    def lattice_offset(self) -> float:
        return float(self._values[0])

    def tail(self, y :float) -> float:
        return float(self._masses[self._values > y].sum())

    def log_tail(self, y :float) -> Tuple[float, float, float]:
        tail = self.tail(y)
        return (-math.log(tail) if tail > 0 else math.inf), 0.0, 0.0

    def mgf(self, s :float) -> Tuple[float, float, float]:
        weights = self._masses * np.exp(s * self._values)
        return float(weights.sum()), float(np.dot(weights, self._values)), float(np.dot(weights, self._values ** 2))

    @property
    def mean(self) -> float:
        return float(np.dot(self._masses, self._values))

    @property
    def variance(self) -> float:
        return float(np.dot(self._masses, (self._values - self.mean) ** 2))

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        centred = self._values - self.mean
        k3 = float(np.dot(self._masses, centred ** 3))
        k4 = float(np.dot(self._masses, centred ** 4)) - 3.0 * self.variance ** 2
        return k3, k4

    @property
    def mgf_domain_sup(self) -> float:
        return math.inf

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return rng.choice(self._values, size = size, p = self._masses)

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        weights = self._masses * np.exp(s * self._values)
        return rng.choice(self._values, size = size, p = weights / weights.sum())
