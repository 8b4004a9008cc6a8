# Typing
from typing import Callable, List, Sequence, Tuple, Union
# Numeric
import math, logging
import numpy as np
from functools import lru_cache
from scipy import signal
from concurrent.futures import ThreadPoolExecutor
# Component
from .types import SequenceDiagnostic, TailRatioDiagnostic, SequenceBlock, LatticeWalk
from .utils import NumericUtils
from .oracle import exact_sn_dist
from .exceptions import NonPositive, SequenceOverflow

logger = logging.getLogger(__name__)

# Params
_DEFAULT_RATIO_TOL = 1e-3
_DEFAULT_CONV_TOL = 1e-2
_DIRECT_CONVOLUTION_LIMIT = 4096
_TRAJECTORY_POINTS = 200
_TREND_FACTOR = 0.5
_COND_RATIO_START = 10
_COND_RATIO_POINTS = 30

# DataType
SequenceSource = Union[Callable[[int], float], Sequence[float], np.ndarray]
TailSource = Callable[[int, float], float]
Verdict = str


def _log_terms(a :SequenceSource, max_n :int, start :int, log_terms :bool) -> np.ndarray:
    """ln a_0 .. ln a_max_n; entries before start are -inf, later ones must be finite."""
    if callable(a):
        values = np.array([a(n) if n >= start else (-math.inf if log_terms else 0.0) for n in range(max_n + 1)],
                          dtype = np.float64)
    else:
        values = np.asarray(a, dtype = np.float64)[:max_n + 1]
        if len(values) < max_n + 1:
            raise ValueError(f"Sequence has {len(values)} terms, {max_n + 1} are needed!")
    with np.errstate(divide = "ignore", invalid = "ignore"):
        logs = values.copy() if log_terms else np.log(values)
    logs[:start] = -math.inf
    # Check positivity and range past start
    tail = logs[start:]
    if np.any(np.isnan(tail)) or np.any(np.isneginf(tail)):
        first = start + int(np.flatnonzero(np.isnan(tail) | np.isneginf(tail))[0])
        raise NonPositive(f"a_{first} is not positive past the positivity index {start}!")
    if np.any(np.isposinf(tail)):
        raise SequenceOverflow("Sequence terms overflow!")
    return logs


def _sample_points(lo :int, hi :int) -> np.ndarray:
    return NumericUtils.integer_log_grid(lo, hi, _TRAJECTORY_POINTS)


def _verdict(deviations :np.ndarray, tol :float) -> Verdict:
    """
    Three-valued reading of |observed - limit| / limit along the last decade:
    consistent when the end is within tol or the deviation at least halves over the decade.
    """
    if not np.all(np.isfinite(deviations)):
        return "inconsistent"
    first, last = float(deviations[0]), float(deviations[-1])
    if last < tol or last <= _TREND_FACTOR * first:
        return "consistent"
    if last >= first:
        return "inconsistent"
    return "inconclusive"


def _last_decade(max_n :int, start :int) -> slice:
    return slice(max(start, max_n // 10), max_n + 1)


def ratio_test(a :SequenceSource,
               gamma :float,
               max_n :int,
               start :int = 1,
               tol :float = _DEFAULT_RATIO_TOL,
               log_terms :bool = False) -> SequenceDiagnostic:
    """
    Trajectory of a_{n-1}/a_n against e^gamma.
    :param a: Callable n -> a_n (or ln a_n), or the terms themselves
    :type a: SequenceSource
    :param gamma: Declared rate
    :type gamma: float
    :param max_n: Last index
    :type max_n: int
    :param start: Positivity index; a_n > 0 for n >= start
    :type start: int
    :param tol: Relative distance to e^gamma accepted at max_n
    :type tol: float
    :param log_terms: The source gives ln a_n
    :type log_terms: bool
    :return: SequenceDiagnostic with the ratio trajectory
    """
    logs = _log_terms(a, max_n, start, log_terms)
    with np.errstate(over = "ignore"):
        ratios = np.exp(logs[start:-1] - logs[start + 1:])
    # ratios[i] belongs to n = start + 1 + i
    target = math.exp(gamma)
    deviations = np.abs(ratios - target) / target
    # Verdict on the last decade
    decade = _last_decade(max_n, start + 1)
    window = deviations[decade.start - start - 1:]
    verdict = _verdict(window, tol)
    points = _sample_points(start + 1, max_n)
    logger.debug("Ratio test up to %d against e^%g: %s", max_n, gamma, verdict)
    return SequenceDiagnostic(gamma_hat = float(math.log(ratios[-1])) if 0 < ratios[-1] < math.inf else math.inf,
                              ratio_trajectory = [(int(n), float(ratios[n - start - 1])) for n in points],
                              verdict = verdict,
                              max_n = max_n)


def _self_convolution(weighted :np.ndarray) -> np.ndarray:
    if len(weighted) <= _DIRECT_CONVOLUTION_LIMIT:
        return np.convolve(weighted, weighted)[:len(weighted)]
    return signal.fftconvolve(weighted, weighted)[:len(weighted)]


def conv_test(a :SequenceSource,
              gamma :float,
              max_n :int,
              start :int = 0,
              tol :float = _DEFAULT_CONV_TOL,
              log_terms :bool = False) -> SequenceDiagnostic:
    """
    Trajectory of a*2_n / a_n against 2 sum_{i <= n} e^{gamma i} a_i.
    Terms are carried as b_i = e^{gamma i} a_i, which leaves the ratio unchanged and keeps it in range.
    :param a: Callable n -> a_n (or ln a_n), or the terms themselves
    :type a: SequenceSource
    :param gamma: Declared rate
    :type gamma: float
    :param max_n: Last index
    :type max_n: int
    :param start: Positivity index
    :type start: int
    :param tol: Relative distance to the partial limit accepted at max_n
    :type tol: float
    :param log_terms: The source gives ln a_n
    :type log_terms: bool
    :return: SequenceDiagnostic with the convolution trajectory and the partial limit 2d
    """
    logs = _log_terms(a, max_n, start, log_terms)
    # Check the weighted terms fit in a float
    shifted = logs + gamma * np.arange(max_n + 1)
    with np.errstate(over = "ignore"):
        weighted = np.exp(shifted)
    if not np.all(np.isfinite(weighted)):
        raise SequenceOverflow(f"e^(gamma n) a_n overflows for gamma = {gamma}!")
    # Self convolution against twice the partial sums
    convolved = _self_convolution(weighted)
    partial = 2.0 * np.cumsum(weighted)
    indices = np.arange(start, max_n + 1)
    # Terms that underflow give nan ratios, read as inconsistent
    with np.errstate(divide = "ignore", invalid = "ignore"):
        ratios = convolved[indices] / weighted[indices]
        deviations = np.abs(ratios - partial[indices]) / partial[indices]
    decade = _last_decade(max_n, start)
    verdict = _verdict(deviations[decade.start - start:], tol)
    points = _sample_points(max(start, 1), max_n)
    logger.debug("Convolution test up to %d with gamma %g: %s", max_n, gamma, verdict)
    return SequenceDiagnostic(gamma_hat = gamma,
                              conv_trajectory = [(int(n), float(ratios[n - start])) for n in points],
                              limit_2d = float(partial[-1]),
                              verdict = verdict,
                              max_n = max_n)


def classify(a :SequenceSource,
             gamma :float,
             max_n :int,
             start :int = 1,
             ratio_tol :float = _DEFAULT_RATIO_TOL,
             conv_tol :float = _DEFAULT_CONV_TOL,
             log_terms :bool = False) -> SequenceDiagnostic:
    """Both tests on one sequence; the weaker verdict wins."""
    ratio = ratio_test(a, gamma, max_n, start, ratio_tol, log_terms)
    # Overflow leaves the ratio test alone
    try:
        conv = conv_test(a, gamma, max_n, start, conv_tol, log_terms)
    except SequenceOverflow as error:
        logger.warning("Convolution test skipped: %s", error)
        return ratio.model_copy(update = {"verdict": "inconsistent" if ratio.verdict == "inconsistent"
                                                      else "inconclusive"})
    order = ("inconsistent", "inconclusive", "consistent")
    verdict = min(ratio.verdict, conv.verdict, key = order.index)
    return SequenceDiagnostic(gamma_hat = ratio.gamma_hat,
                              ratio_trajectory = ratio.ratio_trajectory,
                              conv_trajectory = conv.conv_trajectory,
                              limit_2d = conv.limit_2d,
                              verdict = verdict,
                              max_n = max_n)


def builtin_sequence(block :SequenceBlock) -> Tuple[np.ndarray, int]:
    """
    ln a_0 .. ln a_max_n of a builtin sequence with its positivity index.
    power: n^{-exponent}; petrov: e^{-gamma n} n^{-exponent}; constant: 1; gaussian: e^{-n^2}.
    """
    n = np.arange(block.max_n + 1, dtype = np.float64)
    if block.builtin == "constant":
        return np.zeros(block.max_n + 1), 0
    if block.builtin == "gaussian":
        return -n ** 2, 0
    with np.errstate(divide = "ignore"):
        logs = -block.exponent * np.log(n)
    if block.builtin == "petrov":
        logs -= block.gamma * n
    logs[0] = -math.inf
    return logs, 1


def sum_tail_source(walk :LatticeWalk) -> TailSource:
    """(n, y) -> P(S_n >= y) from the exact law of S_n, one convolution run per n."""

    @lru_cache(maxsize = None)
    def distribution(n :int):
        return exact_sn_dist(walk, n)

    return lambda n, y: distribution(int(n)).sf(y)


def _tail_ratio(source :TailSource, alpha :float, y :float, points :np.ndarray, tol :float) -> TailRatioDiagnostic:
    target = math.exp(alpha * y)
    trajectory = []
    for n in points:
        upper = source(int(n), y)
        trajectory.append((int(n), source(int(n), 0.0) / upper if upper > 0 else math.inf))
    ratios = np.array([value for _, value in trajectory])
    decade = points >= points[-1] / 10
    return TailRatioDiagnostic(y = y,
                               target = target,
                               trajectory = trajectory,
                               verdict = _verdict(np.abs(ratios[decade] - target) / target, tol))


def cond_ratio_test(source :TailSource,
                    alpha :float,
                    y_set :Sequence[float],
                    max_n :int,
                    tol :float = _DEFAULT_CONV_TOL,
                    workers :int = 1) -> List[TailRatioDiagnostic]:
    """
    Trajectories of P(S_n >= 0) / P(S_n >= y) against e^{alpha y}, one per y.
    :param source: (n, y) -> P(S_n >= y), from the oracle or from simulation
    :type source: TailSource
    :param alpha: Declared rate, 0 in the subexponential regimes
    :type alpha: float
    :param y_set: Thresholds; on a lattice they should lie on the lattice of S_n
    :type y_set: Sequence[float]
    :param max_n: Last horizon
    :type max_n: int
    :param tol: Relative distance to the limit accepted at max_n
    :type tol: float
    :param workers: Threads sharing the thresholds
    :type workers: int
    :return: List of TailRatioDiagnostic in the order of y_set
    """
    points = NumericUtils.integer_log_grid(min(_COND_RATIO_START, max_n), max_n, _COND_RATIO_POINTS)
    # One trajectory per threshold
    if workers > 1:
        with ThreadPoolExecutor(max_workers = workers) as pool:
            return list(pool.map(lambda y: _tail_ratio(source, alpha, y, points, tol), y_set))
    return [_tail_ratio(source, alpha, y, points, tol) for y in y_set]
