# Typing
from typing import List, NamedTuple, Tuple, Union
# Numeric
import math, logging
import numpy as np
# Component
from .base import BaseDistribution
from .distributions import LatticeDistribution
from .models import MG1Model, induced_increment
from .types import PrefactorV, AsymptoticEstimate, RNGSpec, RegimeTag
from .utils import NumericUtils
from .cramer_engine import solve_tilt, solve_tilt_mg1, petrov_tail, solve_intermediate, intermediate_tail
from .heavy_engine import heavy1_tail, heavy2_tail
from .oracle import lattice_walk_from_model, exact_e_nu, min_functional_terms
from .mc import simulate_walk_nu_mean, tilted_min_functional_terms
from .exceptions import (ZeroLevel, SeriesNotDecaying, RegimeMismatch, ModelError, InvalidHorizon, UnstableSystem,
                         HeavyTail, IntermediateCase, CramerInstead, NoBracket)

logger = logging.getLogger(__name__)

# Params
_DEFAULT_SERIES_TOL = 1e-4
_FIRST_CHECK = 256
_MAX_TERMS = 10 ** 4
_TERM_EXPONENTS = (1.5, 2.0, 2.5)
_CAP_FIT_AGREEMENT = 1e-2
_DEFAULT_SAMPLES = 100000

# DataType
ModelOrMG1 = Union[BaseDistribution, MG1Model]


def _is_lattice(model :BaseDistribution) -> bool:
    return isinstance(getattr(model, "law", model), LatticeDistribution)


def _log(value :float) -> float:
    return math.log(value) if value > 0 else -math.inf


def v_subexp(model :ModelOrMG1,
             x :float,
             samples :int = _DEFAULT_SAMPLES,
             rng :RNGSpec = RNGSpec()) -> PrefactorV:
    """
    Prefactor of the subexponential regimes: E bp(x) = x/(1 - rho) for M/G/1,
    E nu_x by the exact lattice sum or by simulation for random walks.
    :param model: Increment law or MG1Model
    :type model: ModelOrMG1
    :param x: Level, x >= 0
    :type x: float
    :param samples: Paths for the simulated mean
    :type samples: int
    :param rng: Seed of the simulated mean
    :type rng: RNGSpec
    :return: PrefactorV with alpha = gamma = 0
    """
    # Check level
    if x < 0:
        raise ModelError(f"Level x must be nonnegative, got {x}!")
    if isinstance(model, MG1Model):
        if x == 0:
            raise ZeroLevel("bp(0) is not covered by the busy-period prefactor; start from x > 0!")
        if model.load >= 1.0:
            raise UnstableSystem(f"Load {model.load:.6g} must be below 1 for a stable system!")
        return PrefactorV(value = x / (1.0 - model.load), x = x, method = "closed_form")
    # Exact sum on a lattice, simulation otherwise
    if _is_lattice(model):
        value = exact_e_nu(lattice_walk_from_model(model), x)
        return PrefactorV(value = value, x = x, method = "dp_sum")
    simulation = simulate_walk_nu_mean(model, x, samples, rng)
    return PrefactorV(value = simulation.mean, x = x, method = "mc_mean", stderr = simulation.mean_stderr)


def v_cramer_mg1(alpha :float, gamma :float, x :float) -> PrefactorV:
    """(alpha/gamma) x e^{alpha x}: no overshoot when the workload drains continuously."""
    if alpha <= 0 or gamma <= 0:
        raise ModelError(f"Need alpha > 0 and gamma > 0, got alpha = {alpha}, gamma = {gamma}!")
    if x < 0:
        raise ModelError(f"Level x must be nonnegative, got {x}!")
    return PrefactorV(value = alpha / gamma * x * math.exp(alpha * x),
                      x = x,
                      method = "closed_form",
                      alpha = alpha,
                      gamma = gamma)


def _fitted_remainder(terms :np.ndarray, lo :int, hi :int) -> float:
    """Sum of the terms beyond K = len(terms) - 1, fitted on terms lo .. hi - 1."""
    ks = np.arange(lo, hi)
    return NumericUtils.power_tail_remainder(ks, terms[lo:hi], _TERM_EXPONENTS, len(terms))


def _series_terms(model :BaseDistribution,
                  alpha :float,
                  gamma :float,
                  x :float,
                  n_max :int,
                  samples :int,
                  rng :RNGSpec,
                  workers :int) -> Tuple[np.ndarray, float, str]:
    """Terms k = 0 .. n_max, a bound on the standard error of their sum, and the method label."""
    if _is_lattice(model):
        walk = lattice_walk_from_model(model)
        raw = min_functional_terms(walk, alpha, x, n_max, workers = workers)
        return raw * np.exp(gamma * np.arange(n_max + 1)), 0.0, "dp_series"
    terms, stderr = tilted_min_functional_terms(model, alpha, x, n_max, samples, rng)
    # Terms share paths, so the sum of the standard errors bounds the error of the sum
    return terms, float(stderr.sum()), "mc_series"


def v_rw_series(model :BaseDistribution,
                alpha :float,
                gamma :float,
                x :float,
                tol :float = _DEFAULT_SERIES_TOL,
                samples :int = _DEFAULT_SAMPLES,
                rng :RNGSpec = RNGSpec(),
                workers :int = 1) -> PrefactorV:
    """
    V_rw(x) = e^{alpha x} sum_k e^{gamma k} E[e^{alpha N_k}; N_k >= -x].
    Terms come from the lattice recursion or from simulation under the tilted walk. The sum is
    checked at K = 256, 512, ... The remainder beyond K is fitted twice, on [K/4, K/2) and on [K/2, K],
    with T_k ~ k^{-3/2} (C_0 + C_1 k^{-1/2} + C_2 k^{-1}). The sum stops once T_K is below tol times
    the partial sum and the two fits agree within tol times the partial sum (plus three standard
    errors for simulated terms). At the cap K = 10^4 a fit agreement within 1% of the remainder is
    accepted with a warning. The later fit is added to the value.
    :param model: Increment law
    :type model: BaseDistribution
    :param alpha: Tilt, alpha > 0
    :type alpha: float
    :param gamma: Decay rate, gamma > 0
    :type gamma: float
    :param x: Level, x >= 0
    :type x: float
    :param tol: Relative truncation tolerance
    :type tol: float
    :param samples: Paths when the terms are simulated
    :type samples: int
    :param rng: Seed of the simulated terms
    :type rng: RNGSpec
    :param workers: Threads of the lattice recursion
    :type workers: int
    :return: PrefactorV
    """
    # Check the arguments
    if alpha <= 0 or gamma <= 0:
        raise ModelError(f"Need alpha > 0 and gamma > 0, got alpha = {alpha}, gamma = {gamma}!")
    if x < 0:
        raise ModelError(f"Level x must be nonnegative, got {x}!")
    K = _FIRST_CHECK
    while True:
        terms, noise, method = _series_terms(model, alpha, gamma, x, K, samples, rng, workers)
        partial = float(terms.sum())
        last = float(terms[-1])
        early = _fitted_remainder(terms, K // 4, K // 2)
        late = _fitted_remainder(terms, K // 2, K + 1)
        gap = abs(early - late)
        logger.debug("V series at K = %d: partial %.12g, T_K %.3e, fitted remainders %.6e / %.6e",
                     K, partial, last, early, late)
        # Stop once the last term and the remainder fits have settled
        settled = last < tol * partial
        if settled and gap <= tol * partial + 3.0 * noise:
            break
        if K >= _MAX_TERMS:
            if settled and gap <= _CAP_FIT_AGREEMENT * late:
                logger.warning("V series accepted at the cap K = %d: remainder fits %.6e / %.6e differ by %.2e",
                               K, early, late, gap)
                break
            raise SeriesNotDecaying(f"Series terms did not settle by K = {K}: T_K = {last:.3e}, "
                                    f"partial sum {partial:.6g}, remainder fits {early:.6g} / {late:.6g}!")
        K = min(2 * K, _MAX_TERMS)
    # Return the prefactor with the later fit added
    return PrefactorV(value = math.exp(alpha * x) * (partial + late),
                      x = x,
                      method = method,
                      alpha = alpha,
                      gamma = gamma,
                      truncation_K = K,
                      remainder_bound = math.exp(alpha * x) * max(early, late, gap))


class _Parts(NamedTuple):
    """Prefactor, P(S_n >= 0) evaluation with its log, gamma and flags of one regime."""
    prefactor :PrefactorV
    tail_part :float
    log_tail :float
    gamma :float
    flags :List[str]


def _walk_parts(model :BaseDistribution,
                x :float,
                n :int,
                regime :RegimeTag,
                tol :float,
                samples :int,
                rng :RNGSpec,
                curvature :bool) -> _Parts:
    flags = []
    if regime == "HeavyI":
        tail_part = heavy1_tail(model, n)
        return _Parts(v_subexp(model, x, samples, rng), tail_part, _log(tail_part), 0.0, flags)
    if regime == "HeavyII":
        # The log survives where the value underflows
        estimate = heavy2_tail(model, n, curvature = curvature)
        return _Parts(v_subexp(model, x, samples, rng), estimate.value, estimate.log_value, 0.0,
                      list(estimate.validity_flags))
    if regime == "Cramer":
        sol = solve_tilt(model)
        if model.lattice_span > 0:
            flags.append("lattice_correction")
            logger.info("Lattice correction with span %g applied to %s", model.lattice_span, model.name)
        tail_part = petrov_tail(sol, n, 0.0, model.lattice_span, model.lattice_offset)
        prefactor = v_rw_series(model, sol.alpha, sol.gamma, x, tol, samples, rng)
        return _Parts(prefactor, tail_part, _log(tail_part), sol.gamma, flags)
    if regime == "Intermediate":
        sol = solve_intermediate(model)
        prefactor = v_rw_series(model, sol.alpha, sol.gamma, x, tol, samples, rng)
        tail_part = intermediate_tail(sol, n, 0.0)
        return _Parts(prefactor, tail_part, _log(tail_part), sol.gamma, flags)
    raise ModelError(f"Unknown regime {regime}!")


def _assemble(parts :_Parts,
              regime :str,
              horizon :float,
              factor :float = 1.0) -> AsymptoticEstimate:
    prefactor = parts.prefactor
    value = prefactor.value * factor * parts.tail_part / horizon
    log_value = _log(prefactor.value) + _log(factor) + parts.log_tail - math.log(horizon)
    return AsymptoticEstimate(value = value,
                              log_value = log_value,
                              regime = regime,
                              prefactor = prefactor,
                              tail_part = parts.tail_part,
                              horizon = horizon,
                              interpolation_factor = factor,
                              validity_flags = parts.flags)


def passage_tail_rw(model :BaseDistribution,
                    x :float,
                    n :int,
                    regime :RegimeTag,
                    tol :float = _DEFAULT_SERIES_TOL,
                    samples :int = _DEFAULT_SAMPLES,
                    rng :RNGSpec = RNGSpec(),
                    curvature :bool = False) -> AsymptoticEstimate:
    """
    P(nu_x > n) ~ V_rw(x) P(S_n >= 0) / n.
    :param model: Increment law
    :type model: BaseDistribution
    :param x: Level, x >= 0
    :type x: float
    :param n: Horizon, n >= 1
    :type n: int
    :param regime: Declared regime
    :type regime: RegimeTag
    :param tol: Truncation tolerance of the prefactor series
    :type tol: float
    :param samples: Paths when a prefactor is simulated
    :type samples: int
    :param rng: Seed of simulated prefactors
    :type rng: RNGSpec
    :param curvature: Refined HeavyII form
    :type curvature: bool
    :return: AsymptoticEstimate
    """
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    # Prefactor times P(S_n >= 0), over n
    parts = _walk_parts(model, x, n, regime, tol, samples, rng, curvature)
    return _assemble(parts, regime, float(n))


def _mg1_parts(mg1 :MG1Model,
               x :float,
               t :float,
               regime :RegimeTag,
               curvature :bool) -> _Parts:
    """Prefactor, P(X_t >= 0) evaluation and gamma of the process induced by an M/G/1 queue."""
    increment = induced_increment(mg1)
    if regime == "HeavyI":
        tail_part = heavy1_tail(increment, t)
        return _Parts(v_subexp(mg1, x), tail_part, _log(tail_part), 0.0, [])
    if regime == "HeavyII":
        estimate = heavy2_tail(increment, t, curvature = curvature)
        return _Parts(v_subexp(mg1, x), estimate.value, estimate.log_value, 0.0, list(estimate.validity_flags))
    if regime == "Cramer":
        sol = solve_tilt_mg1(mg1)
        tail_part = petrov_tail(sol, t)
        return _Parts(v_cramer_mg1(sol.alpha, sol.gamma, x), tail_part, _log(tail_part), sol.gamma, [])
    if regime == "Intermediate":
        sol = solve_intermediate(increment)
        tail_part = intermediate_tail(sol, t, 0.0)
        return _Parts(v_cramer_mg1(sol.alpha, sol.gamma, x), tail_part, _log(tail_part), sol.gamma, [])
    raise ModelError(f"Unknown regime {regime}!")


def passage_tail_levy(model :ModelOrMG1,
                      x :float,
                      t :float,
                      regime :RegimeTag,
                      tol :float = _DEFAULT_SERIES_TOL,
                      samples :int = _DEFAULT_SAMPLES,
                      rng :RNGSpec = RNGSpec(),
                      curvature :bool = False) -> AsymptoticEstimate:
    """
    P(tau_x > t) ~ V(x) e^{-gamma (t - [t])} P(X_[t] >= 0) / t.
    :param model: Increment law of the process at unit times, or MG1Model
    :type model: ModelOrMG1
    :param x: Level, x >= 0
    :type x: float
    :param t: Continuous horizon, t >= 1
    :type t: float
    :param regime: Declared regime
    :type regime: RegimeTag
    :param tol: Truncation tolerance of the prefactor series
    :type tol: float
    :param samples: Paths when a prefactor is simulated
    :type samples: int
    :param rng: Seed of simulated prefactors
    :type rng: RNGSpec
    :param curvature: Refined HeavyII form
    :type curvature: bool
    :return: AsymptoticEstimate with the interpolation factor e^{-gamma (t - [t])}
    """
    if t < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {t}!")
    n = int(math.floor(t))
    # Integer part carries the tail, the fraction only decays
    if isinstance(model, MG1Model):
        parts = _mg1_parts(model, x, n, regime, curvature)
    else:
        parts = _walk_parts(model, x, n, regime, tol, samples, rng, curvature)
    return _assemble(parts, regime, float(t), math.exp(-parts.gamma * (t - n)))


def bp_tail(mg1 :MG1Model,
            x :float,
            t :float,
            regime :RegimeTag,
            curvature :bool = False) -> AsymptoticEstimate:
    """
    P(bp(x) > t) of an M/G/1 queue started with workload x.
    HeavyI: lambda x/(1 - rho) P(B > (1 - rho) t). HeavyII: x/(1 - rho) exp(-R(y(t))) with R built
    from the induced increment. Cramer: x e^{alpha x} e^{-gamma t} / (sqrt(2 pi) sigma_hat gamma t^{3/2}).
    Intermediate: V(x) e^{-gamma t} Gbar(t delta) / m(alpha).
    :param mg1: Stable MG1Model
    :type mg1: MG1Model
    :param x: Initial workload, x > 0
    :type x: float
    :param t: Horizon, t >= 1
    :type t: float
    :param regime: Declared regime
    :type regime: RegimeTag
    :param curvature: Refined HeavyII form
    :type curvature: bool
    :return: AsymptoticEstimate with horizon t
    """
    # Check workload, horizon and load
    if x <= 0:
        raise ZeroLevel(f"Busy-period tails need an initial workload x > 0, got {x}!")
    if t < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {t}!")
    if mg1.load >= 1.0:
        raise UnstableSystem(f"Load {mg1.load:.6g} must be below 1 for a stable system!")
    # Check the regime fits the service law
    heavy = mg1.service.mgf_domain_sup == 0.0
    if regime in ("HeavyI", "HeavyII") and not heavy:
        raise RegimeMismatch(f"{regime} needs a service law with infinite mgf on s > 0, "
                             f"{mg1.service.name} has s_max = {mg1.service.mgf_domain_sup:.6g}!")
    if regime == "Intermediate" and mg1.service.tilt_rate is None:
        raise RegimeMismatch(f"Intermediate needs a service tail exp(-alpha y) Gbar(y), {mg1.service.name} has none!")
    try:
        parts = _mg1_parts(mg1, x, t, regime, curvature)
    except (HeavyTail, IntermediateCase, CramerInstead, NoBracket) as error:
        raise RegimeMismatch(f"{regime} does not apply to service {mg1.service.name}: {error}") from error
    return _assemble(parts, regime, float(t))
