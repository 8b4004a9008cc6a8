# Typing
from typing import Callable, List, Literal, Optional, Tuple
# Pydantic
from pydantic import BaseModel, ConfigDict, Field
# Numeric
import math
import numpy as np

# Output records are immutable after construction
_FROZEN = ConfigDict(frozen = True, arbitrary_types_allowed = True)


class CramerSolution(BaseModel):
    """Stationary point alpha of the mgf with e^{-gamma} = m(alpha)."""
    model_config = _FROZEN
    alpha :float = Field(gt = 0.0)
    gamma :float = Field(gt = 0.0)
    m_alpha :float = Field(gt = 0.0, lt = 1.0)
    sigma_hat :float = Field(gt = 0.0)
    residual :float = Field(ge = 0.0)
    iterations :int = 0
    bracket :Tuple[float, float]


class IntermediateSolution(BaseModel):
    """Tilt at the exponential rate alpha where m' does not vanish."""
    model_config = _FROZEN
    alpha :float = Field(gt = 0.0)
    gamma :float
    m_alpha :float = Field(gt = 0.0)
    delta :float = Field(gt = 0.0)
    gbar :Callable[[float], float]


class HeavyIIContext(BaseModel):
    """
    Saddle-point function R(y) of the standardised walk xi' = (xi + a)/sigma.
    The raw increment log-tail g and its derivatives are evaluated at sigma*y - a.
    """
    model_config = _FROZEN
    g :Callable[[float], float]
    g_prime :Callable[[float], float]
    g_second :Callable[[float], float]
    a :float = Field(gt = 0.0)
    sigma :float = Field(gt = 0.0)
    n :float = Field(gt = 0.0)
    t :float = Field(gt = 0.0)
    k :int = Field(ge = 0, le = 2)
    lambda_coeffs :Tuple[float, ...] = ()
    beta :Optional[float] = None


class NewtonResult(BaseModel):
    model_config = _FROZEN
    y_final :float
    iterates :List[float]
    residual :float
    j_min_reached :bool


class PrefactorV(BaseModel):
    model_config = _FROZEN
    value :float = Field(ge = 0.0)
    x :float = Field(ge = 0.0)
    method :Literal["closed_form", "dp_series", "mc_series", "dp_sum", "mc_mean"]
    alpha :float = Field(default = 0.0, ge = 0.0)
    gamma :float = Field(default = 0.0, ge = 0.0)
    truncation_K :int = 0
    remainder_bound :float = 0.0
    stderr :Optional[float] = None


class AsymptoticEstimate(BaseModel):
    """value = prefactor.value * interpolation_factor * tail_part / horizon."""
    model_config = _FROZEN
    value :float
    log_value :float
    regime :str
    prefactor :Optional[PrefactorV] = None
    tail_part :float
    horizon :float = 1.0
    interpolation_factor :float = 1.0
    validity_flags :List[str] = Field(default_factory = list)

    def reconstruct(self) -> float:
        prefactor = 1.0 if self.prefactor is None else self.prefactor.value
        return prefactor * self.interpolation_factor * self.tail_part / self.horizon


class RNGSpec(BaseModel):
    """(algorithm, seed, stream) fixes every draw; streams come from SeedSequence.spawn."""
    model_config = ConfigDict(frozen = True)
    algorithm :Literal["PCG64"] = "PCG64"
    seed :int = Field(default = 20240601, ge = 0, lt = 2 ** 64)
    stream :int = Field(default = 0, ge = 0)


class SimResult(BaseModel):
    model_config = ConfigDict(frozen = True)
    horizon :float
    estimate :float
    stderr :float
    ci95 :Tuple[float, float]
    samples :int
    hits :int
    seed :int
    estimator :Literal["plain", "tilted", "conditional"]


class PassageSimulation(BaseModel):
    """Grid estimates sharing paths, plus the sample mean of the passage time when tracked."""
    model_config = ConfigDict(frozen = True)
    results :List[SimResult]
    mean :Optional[float] = None
    mean_stderr :Optional[float] = None


class LatticeWalk(BaseModel):
    """Increment law on span * offset, offsets in [min_offset, max_offset]."""
    model_config = _FROZEN
    span :float = Field(gt = 0.0)
    min_offset :int
    pmf :np.ndarray

    @property
    def max_offset(self) -> int:
        return self.min_offset + len(self.pmf) - 1

    @property
    def mean(self) -> float:
        offsets = np.arange(self.min_offset, self.max_offset + 1)
        return float(self.span * np.dot(offsets, self.pmf))

    @property
    def variance(self) -> float:
        offsets = self.span * np.arange(self.min_offset, self.max_offset + 1)
        return float(np.dot(offsets ** 2, self.pmf) - self.mean ** 2)


class ExactDistribution(BaseModel):
    """Masses of S_n on the lattice points span * (lo .. hi)."""
    model_config = _FROZEN
    horizon :int
    span :float
    lo :int
    hi :int
    masses :np.ndarray
    truncated_mass :float = 0.0

    def sf(self, y :float) -> float:
        """P(S_n >= y) for lattice or off-lattice y."""
        first = int(np.ceil(y / self.span - 1e-12)) - self.lo
        if first <= 0:
            return float(np.sum(self.masses))
        if first >= len(self.masses):
            return 0.0
        return float(np.sum(self.masses[first:]))


class SequenceDiagnostic(BaseModel):
    model_config = ConfigDict(frozen = True)
    gamma_hat :float
    ratio_trajectory :List[Tuple[int, float]] = Field(default_factory = list)
    conv_trajectory :List[Tuple[int, float]] = Field(default_factory = list)
    limit_2d :Optional[float] = None
    verdict :Literal["consistent", "inconsistent", "inconclusive"]
    max_n :int


class ExpansionFit(BaseModel):
    """
    -R at the Newton point fitted as -rate (a n)^beta + intercept + sum_i D_i n^{e_i}.
    The first k coefficients belong to the ladder exponents (i + 1) beta - i.
    """
    model_config = ConfigDict(frozen = True)
    beta :float
    rate :float
    a :float
    k :int
    exponents :List[float]
    coefficients :List[float]
    intercept :float
    relative_residual :float
    n_values :List[float]

    @property
    def ladder(self) -> List[float]:
        return self.coefficients[:self.k]

    def log_value(self, n :float) -> float:
        exponent = -self.rate * (self.a * n) ** self.beta + self.intercept
        exponent += sum(d * n ** e for d, e in zip(self.coefficients, self.exponents))
        return math.log(n) + exponent

    def value(self, n :float) -> float:
        return math.exp(self.log_value(n))


class TailRatioDiagnostic(BaseModel):
    """Trajectory of P(S_n >= 0) / P(S_n >= y) against its limit e^{alpha y}."""
    model_config = ConfigDict(frozen = True)
    y :float
    target :float
    trajectory :List[Tuple[int, float]]
    verdict :Literal["consistent", "inconsistent", "inconclusive"]
