# Typing
from typing import Callable, Optional, Sequence, Tuple, Union
# Numeric
import math, logging
import numpy as np
from scipy import optimize
# Component
from .base import BaseDistribution, Triple
from .types import HeavyIIContext, NewtonResult, AsymptoticEstimate, ExpansionFit
from .exceptions import (InvalidHorizon, InvalidDrift, Unsupported, MissingCumulant, NoBracket, ValidityViolated,
                         NoConvergence, FitResidualTooLarge, ModelError)

logger = logging.getLogger(__name__)

# Params
_MAX_K = 2
_DEFAULT_NEWTON_TOL = 1e-6
_MAX_NEWTON_ITERATIONS = 100
_VALIDITY_FACTOR = 1.6
_ETA_REL_TOL = 1e-10
_INDEX_PROBE = 1e6
_DEFAULT_EXPANSION_GRID = np.geomspace(1e4, 1e6, 25)
_FIT_RESIDUAL_TOL = 1e-4


def heavy1_tail(model :BaseDistribution, n :int) -> float:
    """
    n P(xi > n a) with a = -E xi. For an M/G/1 model the induced increment supplies
    the tail asymptote arrival_rate * P(B > n a).
    :param model: Increment law or MG1Model
    :type model: Union[BaseDistribution, MG1Model]
    :param n: Number of steps
    :type n: int
    :return: float
    """
    model = getattr(model, "induced_increment", model)
    # Check horizon and drift
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    if model.mean >= 0:
        raise InvalidDrift(f"Increment mean {model.mean:.6g} must be negative!")
    return n * model.tail(-n * model.mean)


def compute_k(beta :float) -> int:
    """
    Number of Cramer-series terms, floor(beta / (1 - beta)).
    :param beta: Regular-variation index of g, in (0, 1)
    :type beta: float
    :return: int in 0..2
    """
    # Check the index
    if not 0.0 < beta < 1.0:
        raise ModelError(f"Index beta must lie in (0, 1), got {beta}!")
    k = int(math.floor(beta / (1.0 - beta) + 1e-12))
    if k > _MAX_K:
        raise Unsupported(f"k = {k} for beta = {beta}; at most {_MAX_K} Cramer-series terms are supported!")
    return k


def cramer_series(model :BaseDistribution, k :int) -> Tuple[float, ...]:
    """
    lambda_0 = kappa3/6 and lambda_1 = (kappa4 - 3 kappa3^2)/24 of the standardised increment.
    :param model: Increment law
    :type model: BaseDistribution
    :param k: Number of coefficients
    :type k: int
    :return: Tuple of k floats
    """
    if k == 0:
        return ()
    k3, k4 = model.cumulants()
    sigma = math.sqrt(model.variance)
    # Standardised third cumulant
    if k3 is None:
        raise MissingCumulant(f"Third cumulant of {model.name} is infinite!")
    k3 = k3 / sigma ** 3
    coeffs = [k3 / 6.0]
    # Standardised fourth cumulant
    if k >= 2:
        if k4 is None:
            raise MissingCumulant(f"Fourth cumulant of {model.name} is infinite!")
        k4 = k4 / sigma ** 4
        coeffs.append((k4 - 3.0 * k3 ** 2) / 24.0)
    return tuple(coeffs)


def estimate_beta(model :BaseDistribution, y :float = _INDEX_PROBE) -> float:
    """y g'(y) / g(y) far out in the tail, or the declared index when the model has one."""
    declared = getattr(model, "declared_beta", None)
    if declared is not None:
        return declared
    g, g1, _ = model.log_tail(y)
    if g <= 0:
        raise ModelError(f"Log-tail of {model.name} is not positive at {y:g}!")
    return y * g1 / g


def build_context(model :BaseDistribution,
                  n :float,
                  x :float = 0.0,
                  beta :Optional[float] = None) -> HeavyIIContext:
    """
    Standardise xi' = (xi + a)/sigma and set the threshold t = (x + n a)/sigma of P(S_n >= x).
    :param model: Increment law with negative mean, or MG1Model
    :type model: Union[BaseDistribution, MG1Model]
    :param n: Horizon
    :type n: float
    :param x: Threshold of the uncentred walk
    :type x: float
    :param beta: Index of g, estimated when omitted
    :type beta: Optional[float]
    :return: HeavyIIContext
    """
    model = getattr(model, "induced_increment", model)
    # Check horizon and drift
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    a = -model.mean
    if a <= 0:
        raise InvalidDrift(f"Increment mean {model.mean:.6g} must be negative!")
    # Scale, index and Cramer-series length
    sigma = math.sqrt(model.variance)
    beta = estimate_beta(model) if beta is None else beta
    k = compute_k(beta)
    return HeavyIIContext(g = lambda u: model.log_tail(u)[0],
                          g_prime = lambda u: model.log_tail(u)[1],
                          g_second = lambda u: model.log_tail(u)[2],
                          a = a,
                          sigma = sigma,
                          n = n,
                          t = (x + n * a) / sigma,
                          k = k,
                          lambda_coeffs = cramer_series(model, k),
                          beta = beta)


def R_eval(ctx :HeavyIIContext, y :float) -> Triple:
    """
    R(y) = g_std(y) + (t - y)^2/(2n) - sum_i lambda_{i-1} (t - y)^{i+2}/n^{i+1} with its two derivatives,
    g_std(y) = g(sigma y - a).
    :param ctx: Context
    :type ctx: HeavyIIContext
    :param y: Point in (0, t]
    :type y: float
    :return: Triple
    """
    n, d, s = ctx.n, ctx.t - y, ctx.sigma
    u = s * y - ctx.a
    # Log-tail and Gaussian parts
    r = ctx.g(u) + d * d / (2.0 * n)
    r1 = s * ctx.g_prime(u) - d / n
    r2 = s * s * ctx.g_second(u) + 1.0 / n
    # Cramer-series corrections
    for i, lam in enumerate(ctx.lambda_coeffs, start = 1):
        r -= lam * d ** (i + 2) / n ** (i + 1)
        r1 += lam * (i + 2) * d ** (i + 1) / n ** (i + 1)
        r2 -= lam * (i + 2) * (i + 1) * d ** i / n ** (i + 1)
    return r, r1, r2


def _log_tail_function(source :Union[BaseDistribution, HeavyIIContext, Callable[[float], float]]) -> Callable[[float], float]:
    if isinstance(source, HeavyIIContext):
        return lambda y: source.g(source.sigma * y - source.a)
    if isinstance(source, BaseDistribution):
        return lambda y: source.log_tail(y)[0]
    return source


def eta(source :Union[BaseDistribution, HeavyIIContext, Callable[[float], float]], z :float) -> float:
    """
    Largest solution of eta^2 / g(eta) = z, by bisection.
    :param source: Log-tail g as a model, a context (standardised g) or a callable
    :type source: Union[BaseDistribution, HeavyIIContext, Callable[[float], float]]
    :param z: Positive level
    :type z: float
    :return: float
    """
    if z <= 0:
        raise ModelError(f"Level z must be positive, got {z}!")
    g = _log_tail_function(source)

    def excess(y :float) -> float:
        value = g(y)
        return y * y / value - z if value > 0 else math.inf

    # Bracket [lo, 2 lo] by doubling up then halving down
    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2.0
        if hi > 1e300:
            raise NoBracket(f"eta^2/g(eta) stays below {z} on the search range!")
    lo = hi
    while excess(lo) >= 0:
        lo /= 2.0
        if lo < 1e-300:
            raise NoBracket(f"eta^2/g(eta) stays above {z} on the search range!")
    return optimize.bisect(excess, lo, 2.0 * lo, xtol = 1e-300, rtol = _ETA_REL_TOL, maxiter = 400)


def newton_y(ctx :HeavyIIContext,
             tol :float = _DEFAULT_NEWTON_TOL,
             max_iterations :int = _MAX_NEWTON_ITERATIONS,
             check_validity :bool = True) -> NewtonResult:
    """
    Iterate y_j = y_{j-1} - n R'(y_{j-1}) from y_0 = t until j >= ceil(k/2) + 1 and |R'(y)| sqrt(n) <= tol.
    :param ctx: Context
    :type ctx: HeavyIIContext
    :param tol: Residual tolerance on |R'| sqrt(n)
    :type tol: float
    :param max_iterations: Hard cap
    :type max_iterations: int
    :param check_validity: Require t >= 1.6 eta(n)
    :type check_validity: bool
    :return: NewtonResult
    """
    n, t = ctx.n, ctx.t
    # Check the validity window
    if check_validity:
        bound = _VALIDITY_FACTOR * eta(ctx, n)
        if t < bound:
            raise ValidityViolated(f"Threshold t = {t:.6g} is below 1.6 eta(n) = {bound:.6g}!")
    j_min = math.ceil(ctx.k / 2) + 1
    y, iterates = t, [t]
    # Iterate from y_0 = t
    for j in range(max_iterations + 1):
        slope = R_eval(ctx, y)[1]
        residual = abs(slope) * math.sqrt(n)
        if j >= j_min and residual <= tol:
            logger.debug("Newton point %.12g after %d iterations, residual %.3e", y, j, residual)
            return NewtonResult(y_final = y, iterates = iterates, residual = residual, j_min_reached = True)
        y = y - n * slope
        iterates.append(y)
    raise NoConvergence(f"Newton iteration did not reach |R'| sqrt(n) <= {tol} in {max_iterations} steps!")


def _estimate(ctx :HeavyIIContext,
              y :float,
              curvature :bool,
              flags :list) -> AsymptoticEstimate:
    r, _, r2 = R_eval(ctx, y)
    # Stay on the log scale; the value may underflow
    log_value = math.log(ctx.n) - r
    if curvature:
        if r2 <= 0:
            raise ModelError(f"R'' = {r2:.6g} is not positive at the Newton point!")
        log_value -= 0.5 * math.log(ctx.n * r2)
        flags.append("curvature")
    if y > ctx.t - math.sqrt(ctx.n) * (1.0 - 1e-6):
        flags.append("y_final_above_t_minus_sqrt_n")
    value = math.exp(log_value)
    return AsymptoticEstimate(value = value,
                              log_value = log_value,
                              regime = "HeavyII",
                              tail_part = value,
                              validity_flags = flags)


def heavy2_from_context(ctx :HeavyIIContext,
                        curvature :bool = False,
                        tol :float = _DEFAULT_NEWTON_TOL) -> AsymptoticEstimate:
    """n exp(-R(y_final)), or n sqrt(1/(n R'')) exp(-R) when curvature is set."""
    result = newton_y(ctx, tol = tol)
    return _estimate(ctx, result.y_final, curvature, [])


def heavy2_tail(model :BaseDistribution,
                n :float,
                x :float = 0.0,
                curvature :bool = False,
                tol :float = _DEFAULT_NEWTON_TOL) -> AsymptoticEstimate:
    """
    Large-deviation tail P(S_n >= x) of a semi-exponential increment.
    :param model: Increment law with negative mean, or MG1Model
    :type model: Union[BaseDistribution, MG1Model]
    :param n: Horizon
    :type n: float
    :param x: Threshold of the uncentred walk
    :type x: float
    :param curvature: Keep the Gaussian factor sqrt(1/(n R''))
    :type curvature: bool
    :param tol: Newton residual tolerance
    :type tol: float
    :return: AsymptoticEstimate with horizon 1 and tail_part equal to the value
    """
    return heavy2_from_context(build_context(model, n, x), curvature = curvature, tol = tol)


def heavy2_first_iterate(ctx :HeavyIIContext) -> AsymptoticEstimate:
    """n exp(-R(t - n g_std'(t))), the explicit first Newton iterate."""
    y1 = ctx.t - ctx.n * R_eval(ctx, ctx.t)[1]
    return _estimate(ctx, y1, False, ["first_iterate"])


def _expansion_exponents(beta :float, k :int) -> Tuple[float, ...]:
    # Ladder exponents first, then the correction from the mean shift
    exponents = []
    for e in [(i + 1) * beta - i for i in range(1, max(k, 2) + 1)] + [beta - 1.0]:
        if all(abs(e - f) > 1e-9 for f in exponents):
            exponents.append(e)
    return tuple(exponents)


def weibull_expansion(model :BaseDistribution,
                      n_values :Sequence[float] = _DEFAULT_EXPANSION_GRID) -> ExpansionFit:
    """
    Fit -R(y_final(n)) + c (a n)^beta on a grid of n to the ladder D_i n^{(i+1) beta - i}.
    :param model: Increment with pure-power log-tail c y^beta moved by a shift
    :type model: BaseDistribution
    :param n_values: Horizons of the fit
    :type n_values: Sequence[float]
    :return: ExpansionFit whose value(n) reconstructs n exp(-R)
    """
    # Check the log-tail is a pure power
    law = getattr(model, "law", model)
    beta = getattr(law, "shape", None)
    rate = getattr(law, "rate", None)
    if beta is None or rate is None:
        raise ModelError(f"{model.name} does not have a pure-power log-tail!")
    k = compute_k(beta)
    if k == 0:
        raise ModelError(f"beta = {beta} gives k = 0; the expansion needs beta > 1/2!")
    a = -model.mean
    # Exponent R at the Newton point for every horizon
    n_values = np.asarray(n_values, dtype = np.float64)
    exponent_r = np.empty(len(n_values))
    for idx, n in enumerate(n_values):
        ctx = build_context(model, float(n), beta = beta)
        exponent_r[idx] = R_eval(ctx, newton_y(ctx).y_final)[0]
    target = -exponent_r + rate * (a * n_values) ** beta
    # Least squares on column-scaled powers of n
    exponents = _expansion_exponents(beta, k)
    with_intercept = all(abs(e) > 1e-9 for e in exponents)
    columns = [n_values ** e for e in exponents] + ([np.ones_like(n_values)] if with_intercept else [])
    design = np.column_stack(columns)
    scale = np.abs(design).max(axis = 0)
    solution, *_ = np.linalg.lstsq(design / scale, target, rcond = None)
    solution = solution / scale
    # Check the fit
    residual = float(np.max(np.abs(design @ solution - target)) / np.max(np.abs(exponent_r)))
    if residual > _FIT_RESIDUAL_TOL:
        raise FitResidualTooLarge(f"Relative residual {residual:.3e} of the expansion fit exceeds {_FIT_RESIDUAL_TOL}!")
    coefficients = [float(d) for d in solution[:len(exponents)]]
    if any(d <= 0 for d in coefficients[:k]):
        logger.warning("Expansion coefficients %s are not all positive", coefficients[:k])
    return ExpansionFit(beta = beta,
                        rate = rate,
                        a = a,
                        k = k,
                        exponents = list(exponents),
                        coefficients = coefficients,
                        intercept = float(solution[-1]) if with_intercept else 0.0,
                        relative_residual = residual,
                        n_values = [float(n) for n in n_values])
