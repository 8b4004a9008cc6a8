# Typing
from typing import Callable, Optional, Tuple
# Numeric
import math, logging
import numpy as np
from scipy import optimize
# Component
from .base import BaseDistribution
from .types import CramerSolution, IntermediateSolution
from .exceptions import (InvalidDrift, HeavyTail, IntermediateCase, NoBracket, CramerInstead, DivergentDelta,
                         OutsideUniformRange, InvalidHorizon, ModelError)

logger = logging.getLogger(__name__)

# Params
_DEFAULT_TILT_TOL = 1e-12
_BOUNDARY_FRACTION = 0.999999
_MAX_BRACKET_STEPS = 200
_MAX_POLISH_STEPS = 8
_INTERMEDIATE_GRID = 64

# DataType
Slope = Callable[[float], Tuple[float, float]]


def _stationary_point(slope :Slope,
                      s_max :float,
                      finite_at :Callable[[float], bool],
                      tol :float,
                      label :str) -> Tuple[float, int, Tuple[float, float]]:
    """
    Root of an increasing slope on (0, s_max) with slope(0) < 0.
    Doubling bracket from min(1, s_max/2), brentq inside it, then Newton steps kept inside the bracket.
    :return: root, iteration count, bracket
    """
    cap = _BOUNDARY_FRACTION * s_max if math.isfinite(s_max) else math.inf
    lo, s = 0.0, min(1.0, s_max / 2.0)
    hi = None
    # Double s until the slope turns positive or the mgf blows up
    for _ in range(_MAX_BRACKET_STEPS):
        value = slope(s)[0]
        if value > 0 or not math.isfinite(value):
            hi = s
            break
        lo = s
        # Slope still negative at the domain edge
        if s >= cap:
            if finite_at(cap):
                raise IntermediateCase(f"{label}: slope still negative at {cap:.6g} with a finite mgf, "
                                       f"no interior stationary point!")
            raise NoBracket(f"{label}: no sign change found below {cap:.6g}!")
        s = min(2.0 * s, cap)
    if hi is None:
        raise NoBracket(f"{label}: no sign change found up to {s:.6g}!")
    # Root inside the bracket
    root, info = optimize.brentq(lambda u: slope(u)[0], lo, hi,
                                 xtol = 1e-15, rtol = 4 * np.finfo(float).eps, full_output = True)
    iterations = info.iterations
    # Newton polish, never leaving the bracket
    for _ in range(_MAX_POLISH_STEPS):
        value, derivative = slope(root)
        if abs(value) <= tol * max(1.0, abs(derivative)) or derivative <= 0:
            break
        candidate = root - value / derivative
        if not lo < candidate < hi:
            break
        root = candidate
        iterations += 1
    logger.debug("%s: stationary point %.15g after %d iterations in [%.6g, %.6g]", label, root, iterations, lo, hi)
    return root, iterations, (lo, hi)


def solve_tilt(model :BaseDistribution,
               tol :float = _DEFAULT_TILT_TOL) -> CramerSolution:
    """
    Solve m'(alpha) = 0 for an increment with negative mean.
    :param model: Increment law
    :type model: BaseDistribution
    :param tol: Residual tolerance relative to max(1, m''(alpha))
    :type tol: float
    :return: CramerSolution with gamma = -ln m(alpha)
    """
    # Check drift and domain
    if model.mean >= 0:
        raise InvalidDrift(f"Increment mean {model.mean:.6g} must be negative!")
    if model.mgf_domain_sup == 0.0:
        raise HeavyTail(f"Mgf of {model.name} is infinite for every s > 0!")

    def slope(s :float) -> Tuple[float, float]:
        _, m1, m2 = model.mgf(s)
        return m1, m2

    alpha, iterations, bracket = _stationary_point(slope = slope,
                                                   s_max = model.mgf_domain_sup,
                                                   finite_at = lambda s: math.isfinite(model.mgf(s)[0]),
                                                   tol = tol,
                                                   label = model.name)
    m, m1, m2 = model.mgf(alpha)
    if abs(m1) > tol * max(1.0, abs(m2)):
        logger.warning("Tilt residual %.3e for %s exceeds the requested %.1e", abs(m1), model.name, tol)
    # Return the solution; sigma_hat^2 is the tilted variance
    return CramerSolution(alpha = alpha,
                          gamma = -math.log(m),
                          m_alpha = m,
                          sigma_hat = math.sqrt(m2 / m),
                          residual = abs(m1),
                          iterations = iterations,
                          bracket = bracket)


def solve_tilt_mg1(mg1,
                   tol :float = _DEFAULT_TILT_TOL) -> CramerSolution:
    """
    Service-side equations of an M/G/1 model: lambda m_B'(alpha) = 1,
    gamma = alpha - lambda (m_B(alpha) - 1), sigma_hat^2 = lambda m_B''(alpha).
    :param mg1: MG1Model
    :type mg1: MG1Model
    :param tol: Residual tolerance
    :type tol: float
    :return: CramerSolution
    """
    lam, service = mg1.arrival_rate, mg1.service
    # Check load and service domain
    if mg1.load >= 1.0:
        raise InvalidDrift(f"Load {mg1.load:.6g} must be below 1!")
    if service.mgf_domain_sup == 0.0:
        raise HeavyTail(f"Service mgf of {service.name} is infinite for every s > 0!")

    def slope(s :float) -> Tuple[float, float]:
        _, mb1, mb2 = service.mgf(s)
        return lam * mb1 - 1.0, lam * mb2

    alpha, iterations, bracket = _stationary_point(slope = slope,
                                                   s_max = service.mgf_domain_sup,
                                                   finite_at = lambda s: math.isfinite(service.mgf(s)[0]),
                                                   tol = tol,
                                                   label = f"M/G/1 with {service.name}")
    mb, mb1, mb2 = service.mgf(alpha)
    # Exponent of the induced increment at alpha
    gamma = alpha - lam * (mb - 1.0)
    return CramerSolution(alpha = alpha,
                          gamma = gamma,
                          m_alpha = math.exp(-gamma),
                          sigma_hat = math.sqrt(lam * mb2),
                          residual = abs(lam * mb1 - 1.0),
                          iterations = iterations,
                          bracket = bracket)


def petrov_tail(sol :CramerSolution,
                n :int,
                y :float = 0.0,
                lattice_span :float = 0.0,
                lattice_offset :float = 0.0) -> float:
    """
    Leading term of P(S_n >= y) under the Cramer condition.
    :param sol: Tilt solution of the increment
    :type sol: CramerSolution
    :param n: Number of steps, n >= 1
    :type n: int
    :param y: Threshold
    :type y: float
    :param lattice_span: Maximal span h of a lattice increment, 0 when non-lattice
    :type lattice_span: float
    :param lattice_offset: Any support point b; S_n lives on n*b + h*Z
    :type lattice_offset: float
    :return: float
    """
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    alpha, norm = sol.alpha, sol.sigma_hat * math.sqrt(2.0 * math.pi * n)
    # Non-lattice form
    if lattice_span <= 0:
        return math.exp(-sol.gamma * n - alpha * y) / (alpha * norm)
    # Lattice form: y moves up to the first support point of S_n
    h = lattice_span
    origin = n * lattice_offset
    y = origin + h * math.ceil((y - origin) / h - 1e-12)
    return math.exp(-sol.gamma * n - alpha * y) * h / (-math.expm1(-alpha * h)) / norm


def _heavy_factor(model :BaseDistribution, alpha :float) -> Callable[[float], float]:
    """Gbar(y) = e^{alpha y} P(xi > y), read from the heavy base where the tail has that structure."""
    law = getattr(model, "law", model)
    base = getattr(law, "base", None)
    shift = getattr(model, "shift", 0.0)
    scale = math.exp(alpha * shift)
    service = getattr(law, "service", None)
    # Induced increment of a queue
    if base is None and service is not None and getattr(service, "base", None) is not None:
        # Compound Poisson sum of convolution-equivalent jobs: P(X > y) ~ lambda m_X(alpha) P(B > y)
        base = service.base
        scale *= law.arrival_rate * law.mgf_value(alpha)

    def gbar(y :float) -> float:
        if base is not None and y > shift:
            return scale * base.tail(y - shift)
        value = model.tail(y)
        return math.exp(alpha * y + math.log(value)) if value > 0 else 0.0

    return gbar


def solve_intermediate(model :BaseDistribution,
                       grid :int = _INTERMEDIATE_GRID) -> IntermediateSolution:
    """
    Tilt at the exponential rate alpha of a tail e^{-alpha y} Gbar(y) when m' stays negative on (0, alpha].
    :param model: Increment whose law carries a tilt rate
    :type model: BaseDistribution
    :param grid: Number of points checking the sign of m' on (0, alpha]
    :type grid: int
    :return: IntermediateSolution with delta = -m'(alpha)/m(alpha)
    """
    # Check the tail carries a tilt rate
    alpha = model.tilt_rate
    if alpha is None:
        raise ModelError(f"{model.name} has no tail of the form exp(-alpha y) Gbar(y)!")
    if model.mean >= 0:
        raise InvalidDrift(f"Increment mean {model.mean:.6g} must be negative!")
    # m' must stay negative up to alpha
    for s in np.linspace(alpha / grid, alpha, grid):
        slope = model.mgf(float(s))[1]
        if slope >= 0:
            if s == alpha and not math.isfinite(slope):
                break
            raise CramerInstead(f"m' vanishes at or before s = {s:.6g} < alpha = {alpha:.6g}!")
    # Check m and m' at alpha
    m, m1, _ = model.mgf(alpha)
    if not math.isfinite(m):
        raise ModelError(f"m(alpha) is infinite for {model.name}!")
    if not math.isfinite(m1):
        raise DivergentDelta(f"m'(alpha) is infinite for {model.name}!")
    # Drift of the tilted walk is -delta
    delta = -m1 / m
    logger.debug("Intermediate tilt of %s: alpha %.6g, m %.12g, delta %.12g", model.name, alpha, m, delta)
    return IntermediateSolution(alpha = alpha,
                                gamma = -math.log(m),
                                m_alpha = m,
                                delta = delta,
                                gbar = _heavy_factor(model, alpha))


def intermediate_tail(sol :IntermediateSolution,
                      n :int,
                      x :float,
                      epsilon :Optional[float] = None) -> float:
    """
    (1/m(alpha)) e^{-gamma n} e^{-alpha x} n Gbar(x + n delta), uniform in x >= -n (delta - epsilon).
    :param sol: Intermediate tilt solution
    :type sol: IntermediateSolution
    :param n: Number of steps
    :type n: int
    :param x: Threshold
    :type x: float
    :param epsilon: Margin of the uniform range, default delta/2
    :type epsilon: Optional[float]
    :return: float
    """
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    # Check x lies in the uniform range
    epsilon = sol.delta / 2.0 if epsilon is None else epsilon
    if not 0 < epsilon < sol.delta:
        raise ModelError(f"Epsilon {epsilon} must lie in (0, delta = {sol.delta:.6g})!")
    if x < -n * (sol.delta - epsilon):
        raise OutsideUniformRange(f"x = {x} is below -n (delta - epsilon) = {-n * (sol.delta - epsilon):.6g}!")
    return math.exp(-sol.gamma * n - sol.alpha * x) * n * sol.gbar(x + n * sol.delta) / sol.m_alpha
