# Typing
from typing import List, Optional, Tuple, Union
# Numeric
import math, logging
import numpy as np
# Component
from .base import BaseDistribution, Triple
from .distributions import (ParetoDistribution, LomaxDistribution, WeibullDistribution, ExponentialDistribution,
                            TiltedHeavyDistribution, LatticeDistribution, UserAnalyticDistribution,
                            CompoundPoissonDistribution)
from .types import (ParetoLike, LomaxLike, WeibullLike, ExponentialFamily, TiltedHeavy, LatticePMF, UserAnalytic,
                    TailFamily, RegimeTag, Finding, ModelBlock, MG1Block)
from .exceptions import (ModelError, PassageTailError, UnstableSystem, IntermediateCase, HeavyTail, CramerInstead)
from .cramer_engine import solve_tilt, solve_intermediate

logger = logging.getLogger(__name__)

# Params
_INSENSITIVITY_HORIZONS = (1e2, 1e3, 1e4)
_DEFAULT_INSENSITIVITY_TOL = 0.05
_INDEX_GRID = np.geomspace(1e1, 1e6, 61)
_INDEX_TOL = 0.05
_LATTICE_SHIFT_TOL = 1e-12


def build_distribution(family :Union[TailFamily, BaseDistribution],
                       quad_rel_tol :Optional[float] = None) -> BaseDistribution:
    """
    Turn a family description into its law.
    :param family: One of the TailFamily variants, or an already built law
    :type family: Union[TailFamily, BaseDistribution]
    :param quad_rel_tol: Relative tolerance of the tail quadratures, family default when None
    :type quad_rel_tol: Optional[float]
    :return: BaseDistribution
    """
    # Return a built law untouched
    if isinstance(family, BaseDistribution):
        return family
    law = _build_law(family, quad_rel_tol)
    if quad_rel_tol is not None:
        law.quad_rel_tol = quad_rel_tol
    return law


def _build_law(family :TailFamily, quad_rel_tol :Optional[float]) -> BaseDistribution:
    if isinstance(family, ParetoLike):
        return ParetoDistribution(family)
    if isinstance(family, LomaxLike):
        return LomaxDistribution(family)
    if isinstance(family, WeibullLike):
        return WeibullDistribution(family)
    if isinstance(family, ExponentialFamily):
        return ExponentialDistribution(family)
    if isinstance(family, TiltedHeavy):
        return TiltedHeavyDistribution(alpha = family.alpha,
                                       base = build_distribution(family.base, quad_rel_tol),
                                       quad_rel_tol = quad_rel_tol)
    if isinstance(family, LatticePMF):
        return LatticeDistribution(family)
    if isinstance(family, UserAnalytic):
        return UserAnalyticDistribution(family, quad_rel_tol)
    raise ModelError(f"Unknown tail family {type(family).__name__}!")


class IncrementModel(BaseDistribution):
    """
    One-step increment xi = Y + shift, Y drawn from a tail family.
    Immutable after construction.
    """

    def __init__(self,
                 family :Union[TailFamily, BaseDistribution],
                 shift :float = 0.0,
                 quad_rel_tol :Optional[float] = None):
        """
        :param family: Tail family of Y (or a built law)
        :type family: Union[TailFamily, BaseDistribution]
        :param shift: Location moved onto every draw
        :type shift: float
        :param quad_rel_tol: Relative tolerance of the tail quadratures
        :type quad_rel_tol: Optional[float]
        """
        self._family = family
        self._law = build_distribution(family, quad_rel_tol)
        self._shift = float(shift)
        # Check the shift stays on the lattice
        if isinstance(self._law, LatticeDistribution):
            steps = self._shift / self._law.span
            if abs(steps - round(steps)) > _LATTICE_SHIFT_TOL:
                raise ModelError(f"Shift {shift} of a lattice model must be a multiple of the span {self._law.span}!")

    @classmethod
    def from_block(cls, block :ModelBlock, quad_rel_tol :Optional[float] = None) -> "IncrementModel":
        return cls(family = block.family, shift = block.shift, quad_rel_tol = quad_rel_tol)

    @property
    def name(self) -> str:
        return f"{self._law.name}{'' if self._shift == 0 else f' shifted by {self._shift:g}'}"

    @property
    def family(self) -> Union[TailFamily, BaseDistribution]:
        return self._family

    @property
    def law(self) -> BaseDistribution:
        return self._law

    @property
    def shift(self) -> float:
        return self._shift

    @property
    def declared_beta(self) -> Optional[float]:
        if isinstance(self._law, WeibullDistribution):
            return self._law.shape
        return getattr(self._law, "declared_beta", None)

    def tail(self, y :float) -> float:
        return self._law.tail(y - self._shift)

    def log_tail(self, y :float) -> Triple:
        return self._law.log_tail(y - self._shift)

    def mgf(self, s :float) -> Triple:
        m, m1, m2 = self._law.mgf(s)
        if not math.isfinite(m):
            return math.inf, math.inf, math.inf
        if self._shift == 0:
            return m, m1, m2
        d = self._shift
        scale = math.exp(s * d)
        return scale * m, scale * (m1 + d * m), scale * (m2 + 2.0 * d * m1 + d * d * m)

    @property
    def mean(self) -> float:
        return self._law.mean + self._shift

    @property
    def variance(self) -> float:
        return self._law.variance

    def cumulants(self) -> Tuple[Optional[float], Optional[float]]:
        return self._law.cumulants()

    @property
    def mgf_domain_sup(self) -> float:
        return self._law.mgf_domain_sup

    @property
    def mgf_sup_attained(self) -> bool:
        return self._law.mgf_sup_attained

    @property
    def lattice_span(self) -> float:
        return self._law.lattice_span

    @property
    def lattice_offset(self) -> float:
        return self._law.lattice_offset + self._shift

    @property
    def tilt_rate(self) -> Optional[float]:
        return self._law.tilt_rate

    @property
    def breakpoint(self) -> float:
        return self._law.breakpoint + self._shift

    def sample(self, rng :np.random.Generator, size :int) -> np.ndarray:
        return self._law.sample(rng, size) + self._shift

    def tilted_sample(self, rng :np.random.Generator, size :int, s :float) -> np.ndarray:
        # Tilting commutes with a location shift
        return self._law.tilted_sample(rng, size, s) + self._shift


class MG1Model:
    """Poisson(arrival_rate) arrivals of positive service times B, served at unit rate."""

    def __init__(self,
                 arrival_rate :float,
                 service :Union[TailFamily, BaseDistribution],
                 quad_rel_tol :Optional[float] = None):
        if arrival_rate <= 0:
            raise ModelError(f"Arrival rate must be positive, got {arrival_rate}!")
        self._lam = float(arrival_rate)
        self._service_family = service
        self._service = build_distribution(service, quad_rel_tol)
        if self._service.tail(0.0) < 1.0 or self._service.mean <= 0:
            raise ModelError(f"Service law {self._service.name} must be supported on the positive half-line!")

    @classmethod
    def from_block(cls, block :MG1Block, quad_rel_tol :Optional[float] = None) -> "MG1Model":
        return cls(arrival_rate = block.arrival_rate, service = block.service, quad_rel_tol = quad_rel_tol)

    @property
    def arrival_rate(self) -> float:
        return self._lam

    @property
    def service(self) -> BaseDistribution:
        return self._service

    @property
    def service_family(self) -> Union[TailFamily, BaseDistribution]:
        return self._service_family

    @property
    def load(self) -> float:
        return self._lam * self._service.mean

    @property
    def induced_increment(self) -> IncrementModel:
        return induced_increment(self)


def tail(model :BaseDistribution, y :float) -> float:
    """P(xi > y)."""
    return model.tail(y)


def mgf(model :BaseDistribution, s :float) -> Triple:
    """
    m(s), m'(s), m''(s) of the increment, +inf outside the domain.
    :param model: Increment law
    :type model: BaseDistribution
    :param s: Argument, s >= 0
    :type s: float
    :return: Triple
    """
    # Check argument
    if s < 0:
        raise ModelError(f"Mgf argument must be nonnegative, got {s}!")
    return model.mgf(s)


def induced_increment(mg1 :MG1Model) -> IncrementModel:
    """
    Law of X_1 = B_1 + ... + B_N(1) - 1.
    :param mg1: Stable M/G/1 model
    :type mg1: MG1Model
    :return: IncrementModel with mean load - 1
    """
    # Check load
    if mg1.load >= 1.0:
        raise UnstableSystem(f"Load {mg1.load:.6g} must be below 1 for a stable system!")
    return IncrementModel(CompoundPoissonDistribution(arrival_rate = mg1.arrival_rate, service = mg1.service))


def sanity_check(model :BaseDistribution,
                 regime :RegimeTag,
                 insensitivity_tol :float = _DEFAULT_INSENSITIVITY_TOL) -> List[Finding]:
    """
    Advisory numeric checks of the preconditions of a declared regime. Never raises.
    :param model: Increment law
    :type model: BaseDistribution
    :param regime: Declared regime
    :type regime: RegimeTag
    :param insensitivity_tol: Allowed distance of the insensitivity ratio from 1 at the largest horizon
    :type insensitivity_tol: float
    :return: List of findings
    """
    findings = [Finding(regime = regime,
                        check = "negative_drift",
                        passed = model.mean < 0,
                        message = f"mean = {model.mean:.6g}")]
    # Checks of the declared regime
    if regime == "HeavyI":
        findings.append(_heavy_precondition(model, regime))
        findings.append(_insensitivity(model, regime, insensitivity_tol))
    elif regime == "HeavyII":
        findings.append(_heavy_precondition(model, regime))
        findings.extend(_log_tail_shape(model, regime))
    elif regime == "Cramer":
        findings.append(_try_solver(model, regime, solve_tilt))
    elif regime == "Intermediate":
        findings.append(_try_solver(model, regime, solve_intermediate))
    else:
        findings.append(Finding(regime = regime, check = "regime", passed = False, message = "unknown regime"))
    # Log what failed
    for finding in findings:
        if not finding.passed:
            logger.warning("%s check %s failed: %s", regime, finding.check, finding.message)
    return findings


def _heavy_precondition(model :BaseDistribution, regime :str) -> Finding:
    heavy = model.mgf_domain_sup == 0.0
    return Finding(regime = regime,
                   check = "heavy_tail",
                   passed = heavy,
                   message = "mgf infinite for every s > 0" if heavy else
                   f"mgf finite on a neighbourhood of 0 (s_max = {model.mgf_domain_sup:.6g})",
                   suggestion = None if heavy else "Cramer")


def _insensitivity(model :BaseDistribution, regime :str, tol :float) -> Finding:
    ratios = []
    for n in _INSENSITIVITY_HORIZONS:
        upper = model.tail(n)
        ratios.append(model.tail(n - math.sqrt(n)) / upper if upper > 0 else math.inf)
    passed = all(math.isfinite(r) for r in ratios) and \
        ratios[-1] <= ratios[0] + 1e-12 and abs(ratios[-1] - 1.0) <= tol
    return Finding(regime = regime,
                   check = "insensitivity",
                   passed = passed,
                   message = "tail(n - sqrt n) / tail(n) at n = 1e2, 1e3, 1e4: " +
                   ", ".join(f"{r:.6g}" for r in ratios),
                   suggestion = None if passed else "HeavyII")


def _log_tail_shape(model :BaseDistribution, regime :str) -> List[Finding]:
    values = np.array([model.log_tail(y) for y in _INDEX_GRID])
    g, g1, g2 = values[:, 0], values[:, 1], values[:, 2]
    findings = []
    monotone = bool(np.all(np.diff(g2) >= -1e-12 * np.maximum(1.0, np.abs(g2[1:]))))
    findings.append(Finding(regime = regime,
                            check = "g_second_monotone",
                            passed = monotone,
                            message = "g'' nondecreasing on the grid" if monotone else "g'' decreases on the grid"))
    if not (g[-1] > 0 and g1[-1] > 0):
        findings.append(Finding(regime = regime, check = "index", passed = False,
                                message = "log-tail not increasing at the end of the grid"))
        return findings
    beta = float(_INDEX_GRID[-1] * g1[-1] / g[-1])
    curvature = float(_INDEX_GRID[-1] * g2[-1] / g1[-1])
    declared = getattr(model, "declared_beta", None)
    index_ok = 0.0 < beta < 1.0 and abs(curvature - (beta - 1.0)) <= _INDEX_TOL and \
        (declared is None or abs(declared - beta) <= _INDEX_TOL)
    findings.append(Finding(regime = regime,
                            check = "index",
                            passed = index_ok,
                            message = f"y g'/g = {beta:.6g}, y g''/g' = {curvature:.6g}"))
    if not 0.0 < beta < 1.0:
        return findings
    k = int(math.floor(beta / (1.0 - beta) + 1e-9))
    if k == 0:
        findings.append(Finding(regime = regime, check = "k", passed = False,
                                message = "k=0: tails lighter threshold not met", suggestion = "HeavyI"))
    elif k > 2:
        findings.append(Finding(regime = regime, check = "k", passed = False,
                                message = f"k={k}: Cramer series beyond two terms is unsupported"))
    else:
        findings.append(Finding(regime = regime, check = "k", passed = True, message = f"k={k}"))
    return findings


def _try_solver(model :BaseDistribution, regime :str, solver) -> Finding:
    try:
        solution = solver(model)
    except (PassageTailError, ValueError, ArithmeticError) as error:
        suggestion = None
        if isinstance(error, IntermediateCase):
            suggestion = "Intermediate"
        elif isinstance(error, CramerInstead):
            suggestion = "Cramer"
        elif isinstance(error, HeavyTail):
            suggestion = "HeavyI"
        return Finding(regime = regime, check = "solver", passed = False, message = str(error),
                       suggestion = suggestion)
    return Finding(regime = regime,
                   check = "solver",
                   passed = True,
                   message = f"alpha = {solution.alpha:.10g}, gamma = {solution.gamma:.10g}")
