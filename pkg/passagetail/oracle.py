# Typing
from typing import Iterator, Union
# Numeric
import math, logging
import numpy as np
from concurrent.futures import ThreadPoolExecutor
# Component
from .base import BaseDistribution
from .distributions import LatticeDistribution
from .types import LatticeWalk, ExactDistribution
from .utils import NumericUtils
from .exceptions import InvalidHorizon, InvalidDrift, ModelError, WindowOverflow, SlowDecay

logger = logging.getLogger(__name__)

# Params
_FULL_WINDOW_LIMIT = 400000
_WINDOW_SIGMAS = 12.0
_TRUNCATION_PER_STEP = 1e-15
_NEGLIGIBLE_MASS = 1e-300
_DEFAULT_E_NU_TOL = 1e-10
_SLOW_RATIO = 0.9999
_E_NU_MIN_STEPS = 50
_E_NU_MAX_STEPS = 10 ** 6


def lattice_walk_from_model(model :Union[BaseDistribution, LatticeWalk]) -> LatticeWalk:
    """
    Lattice walk of a LatticePMF increment moved by a shift that is a multiple of its span.
    :param model: IncrementModel over a lattice family, a LatticeDistribution, or a walk
    :type model: Union[BaseDistribution, LatticeWalk]
    :return: LatticeWalk
    """
    if isinstance(model, LatticeWalk):
        return model
    # Check the law sits on a lattice
    law = getattr(model, "law", model)
    if not isinstance(law, LatticeDistribution):
        raise ModelError(f"{model.name} is not a lattice model!")
    # Shift in units of the span
    steps = int(round(getattr(model, "shift", 0.0) / law.span))
    offsets = law.offsets + steps
    lo = int(offsets.min())
    pmf = np.zeros(int(offsets.max()) - lo + 1)
    pmf[offsets - lo] = law.masses
    return LatticeWalk(span = law.span, min_offset = lo, pmf = pmf)


def _levels(walk :LatticeWalk, x :float) -> int:
    if x < 0:
        raise ModelError(f"Level x must be nonnegative, got {x}!")
    return int(math.floor(x / walk.span + 1e-12))


def exact_sn_dist(walk :LatticeWalk,
                  n :int,
                  method :str = "auto") -> ExactDistribution:
    """
    Law of S_n by iterated convolution, on the full support when it fits and on
    mean +- 12 sigma sqrt(n) otherwise.
    :param walk: Lattice walk
    :type walk: LatticeWalk
    :param n: Number of steps, n >= 1
    :type n: int
    :param method: Convolution method, "auto", "direct" or "fft"
    :type method: str
    :return: ExactDistribution
    """
    # Check horizon
    if n < 1:
        raise InvalidHorizon(f"Horizon must be at least 1, got {n}!")
    # Full support or a moving window
    width = len(walk.pmf) - 1
    full = n * width + 1 <= _FULL_WINDOW_LIMIT
    half = _WINDOW_SIGMAS * math.sqrt(walk.variance * n) / walk.span
    drift = walk.mean / walk.span
    masses, lo, truncated = walk.pmf.copy(), walk.min_offset, 0.0
    for step in range(2, n + 1):
        masses = NumericUtils.convolve(masses, walk.pmf, method)
        lo += walk.min_offset
        if full:
            continue
        # Window follows the mean of S_step with the width of S_n
        keep_lo = max(lo, int(math.floor(step * drift - half)))
        keep_hi = min(lo + len(masses) - 1, int(math.ceil(step * drift + half)))
        shed = masses[:keep_lo - lo].sum() + masses[keep_hi - lo + 1:].sum()
        if shed > _TRUNCATION_PER_STEP:
            raise WindowOverflow(f"Step {step} sheds {shed:.3e} outside the window!")
        truncated += shed
        masses = masses[keep_lo - lo:keep_hi - lo + 1]
        lo = keep_lo
    return ExactDistribution(horizon = n,
                             span = walk.span,
                             lo = lo,
                             hi = lo + len(masses) - 1,
                             masses = masses,
                             truncated_mass = truncated)


def _barrier_steps(walk :LatticeWalk, levels :int) -> Iterator[float]:
    """
    Surviving mass after 0, 1, 2, ... steps with absorption strictly below -levels * span.
    The state vector covers lattice indices -levels .. -levels + len - 1.
    """
    # Start at 0, levels above the barrier
    state = np.zeros(levels + 1)
    state[levels] = 1.0
    yield 1.0
    while True:
        # Every path absorbed
        if len(state) == 0:
            yield 0.0
            continue
        moved = NumericUtils.convolve(state, walk.pmf)
        # moved[0] sits at index -levels + min_offset
        if walk.min_offset < 0:
            moved = moved[-walk.min_offset:]
        elif walk.min_offset > 0:
            moved = np.concatenate([np.zeros(walk.min_offset), moved])
        # Trim negligible mass at the top
        top = len(moved)
        while top > 1 and moved[top - 1] < _NEGLIGIBLE_MASS:
            top -= 1
        state = moved[:top]
        yield float(state.sum())


def passage_survival(walk :LatticeWalk, x :float, n_max :int) -> np.ndarray:
    """
    P(nu_x > k) for k = 0 .. n_max, nu_x = min{k >= 1 : S_k < -x}.
    :param walk: Lattice walk
    :type walk: LatticeWalk
    :param x: Level, x >= 0
    :type x: float
    :param n_max: Last horizon
    :type n_max: int
    :return: np.ndarray of length n_max + 1
    """
    # Check horizon
    if n_max < 0:
        raise InvalidHorizon(f"Horizon must be nonnegative, got {n_max}!")
    steps = _barrier_steps(walk, _levels(walk, x))
    return np.array([next(steps) for _ in range(n_max + 1)])


def exact_passage(walk :LatticeWalk, x :float, n :int) -> float:
    """P(nu_x > n) by the absorbing-barrier recursion."""
    return float(passage_survival(walk, x, n)[n])


def min_functional_terms(walk :LatticeWalk,
                         alpha :float,
                         x :float,
                         n_max :int,
                         workers :int = 1) -> np.ndarray:
    """
    E[e^{alpha N_k}; N_k >= -x] for k = 0 .. n_max, N_k = min_{l <= k} S_l,
    from one barrier recursion per lattice level in [-x, 0].
    :param walk: Lattice walk
    :type walk: LatticeWalk
    :param alpha: Exponent, alpha >= 0
    :type alpha: float
    :param x: Level, x >= 0
    :type x: float
    :param n_max: Last horizon
    :type n_max: int
    :param workers: Threads sharing the levels
    :type workers: int
    :return: np.ndarray of length n_max + 1
    """
    # Check alpha
    if alpha < 0:
        raise ModelError(f"Alpha must be nonnegative, got {alpha}!")
    levels = _levels(walk, x)
    # P(N_k >= -j h) for every level j
    if workers > 1:
        with ThreadPoolExecutor(max_workers = workers) as pool:
            at_least = list(pool.map(lambda j: passage_survival(walk, j * walk.span, n_max), range(levels + 1)))
    else:
        at_least = [passage_survival(walk, j * walk.span, n_max) for j in range(levels + 1)]
    # P(N_k = -j h) = P(N_k >= -j h) - P(N_k >= -(j - 1) h)
    total = np.zeros(n_max + 1)
    previous = np.zeros(n_max + 1)
    for j, current in enumerate(at_least):
        total += math.exp(-alpha * j * walk.span) * (current - previous)
        previous = current
    return total


def exact_min_functional(walk :LatticeWalk, alpha :float, x :float, n :int) -> float:
    """E[e^{alpha N_n}; N_n >= -x]."""
    return float(min_functional_terms(walk, alpha, x, n)[n])


def exact_e_nu(walk :LatticeWalk,
               x :float,
               tol :float = _DEFAULT_E_NU_TOL) -> float:
    """
    E nu_x = sum_n P(nu_x > n), closed by a geometric tail fitted to the last survival ratio.
    :param walk: Lattice walk with negative mean
    :type walk: LatticeWalk
    :param x: Level, x >= 0
    :type x: float
    :param tol: Relative bound on the extrapolated remainder
    :type tol: float
    :return: float
    """
    # Check drift
    if walk.mean >= 0:
        raise InvalidDrift(f"Walk mean {walk.mean:.6g} must be negative!")
    support = np.flatnonzero(walk.pmf)
    # Survival of a walk with period d only decays every d steps
    period = max(1, int(np.gcd.reduce(np.diff(support)))) if len(support) > 1 else 1
    steps = _barrier_steps(walk, _levels(walk, x))
    total, history = 0.0, []
    for n in range(_E_NU_MAX_STEPS):
        survival = next(steps)
        total += survival
        if survival == 0.0:
            return total
        history.append(survival)
        # Geometric tail from the survival ratio over one period
        if n >= max(_E_NU_MIN_STEPS, period):
            ratio = (survival / history[n - period]) ** (1.0 / period)
            if ratio > _SLOW_RATIO:
                raise SlowDecay(f"Survival ratio {ratio:.6f} at n = {n} is too close to 1!")
            remainder = survival * ratio / (1.0 - ratio)
            if remainder < tol * total:
                logger.debug("E nu_%g summed to n = %d, remainder %.3e", x, n, remainder)
                return total + remainder
    raise SlowDecay(f"Survival did not decay within {_E_NU_MAX_STEPS} steps!")
