# Typing
from typing import Callable, List, Optional, Sequence, Tuple
# Numeric
import math, logging
import numpy as np
from concurrent.futures import ThreadPoolExecutor
# Component
from .base import BaseDistribution
from .types import RNGSpec, SimResult, PassageSimulation, CramerSolution
from .utils import NumericUtils
from .cramer_engine import solve_tilt
from .exceptions import ModelError, InvalidDrift

logger = logging.getLogger(__name__)

# Params
_BATCH_SIZE = 100000
_Z95 = 1.96
_DEFAULT_MAX_STEPS = 10 ** 6
_DEFAULT_MAX_EVENTS = 10 ** 7

# DataType
Draw = Callable[[int], np.ndarray]


def spawn_generators(rng :RNGSpec, count :int) -> List[np.random.Generator]:
    """
    Independent PCG64 generators for streams rng.stream .. rng.stream + count - 1 of one seed.
    Streams come from SeedSequence.spawn, so stream i is the same whatever count is.
    :param rng: Seed and first stream
    :type rng: RNGSpec
    :param count: Number of streams
    :type count: int
    :return: List[np.random.Generator]
    """
    # Spawn every stream up to the last one and keep the requested tail
    children = np.random.SeedSequence(rng.seed).spawn(rng.stream + count)[rng.stream:]
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def _partition(samples :int, streams :int) -> List[int]:
    base, extra = divmod(samples, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


class SurvivalTally:
    """Sufficient statistics of per-horizon estimates; merge is associative."""

    def __init__(self, grid_size :int):
        self.samples = 0
        self.hits = np.zeros(grid_size, dtype = np.int64)
        self.weight_sum = np.zeros(grid_size)
        self.weight_sq = np.zeros(grid_size)
        self.value_sum = 0.0
        self.value_sq = 0.0
        self.value_count = 0

    def merge(self, other :"SurvivalTally") -> "SurvivalTally":
        merged = SurvivalTally(len(self.hits))
        merged.samples = self.samples + other.samples
        merged.hits = self.hits + other.hits
        merged.weight_sum = self.weight_sum + other.weight_sum
        merged.weight_sq = self.weight_sq + other.weight_sq
        merged.value_sum = self.value_sum + other.value_sum
        merged.value_sq = self.value_sq + other.value_sq
        merged.value_count = self.value_count + other.value_count
        return merged

    def record(self, idx :int, weights :Optional[np.ndarray], count :int) -> None:
        self.hits[idx] += count
        if weights is not None:
            self.weight_sum[idx] += weights.sum()
            self.weight_sq[idx] += np.dot(weights, weights)

    def add_values(self, values :np.ndarray) -> None:
        self.value_sum += values.sum()
        self.value_sq += np.dot(values, values)
        self.value_count += len(values)

    def results(self, grid :Sequence[float], seed :int, estimator :str) -> List[SimResult]:
        results = []
        for idx, horizon in enumerate(grid):
            # Plain estimates are hit frequencies, the others weight averages
            if estimator == "plain":
                estimate = self.hits[idx] / self.samples
                stderr = math.sqrt(estimate * (1.0 - estimate) / self.samples)
            else:
                estimate = self.weight_sum[idx] / self.samples
                second = self.weight_sq[idx] / self.samples
                stderr = math.sqrt(max(second - estimate * estimate, 0.0) / self.samples)
            results.append(SimResult(horizon = float(horizon),
                                     estimate = float(estimate),
                                     stderr = stderr,
                                     ci95 = (float(estimate - _Z95 * stderr), float(estimate + _Z95 * stderr)),
                                     samples = self.samples,
                                     hits = int(self.hits[idx]),
                                     seed = seed,
                                     estimator = estimator))
        return results

    def simulation(self, grid :Sequence[float], seed :int, estimator :str) -> PassageSimulation:
        mean, stderr = None, None
        if self.value_count > 0:
            mean, stderr = NumericUtils.mean_and_stderr(self.value_sum, self.value_sq, self.value_count)
        return PassageSimulation(results = self.results(grid, seed, estimator), mean = mean, mean_stderr = stderr)


def _run_streams(worker :Callable[[np.random.Generator, int], SurvivalTally],
                 rng :RNGSpec,
                 samples :int,
                 streams :int,
                 workers :int) -> SurvivalTally:
    """Run worker(generator, count) on every stream and merge the tallies in stream order."""
    # Check sample count
    if samples < 1:
        raise ModelError(f"Sample count must be positive, got {samples}!")
    generators = spawn_generators(rng, streams)
    counts = _partition(samples, streams)
    # Run the streams in threads when asked
    if workers > 1:
        with ThreadPoolExecutor(max_workers = workers) as pool:
            tallies = list(pool.map(worker, generators, counts))
    else:
        tallies = [worker(gen, count) for gen, count in zip(generators, counts)]
    # Merge in stream order
    merged = tallies[0]
    for tally in tallies[1:]:
        merged = merged.merge(tally)
    return merged


def _batches(count :int) -> List[int]:
    return [min(_BATCH_SIZE, count - start) for start in range(0, count, _BATCH_SIZE)]


def _grid_order(grid :Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    grid = np.asarray(grid, dtype = np.float64)
    # Check the grid
    if grid.size == 0:
        raise ModelError("Horizon grid must not be empty!")
    if np.any(grid < 0):
        raise ModelError("Horizons must be nonnegative!")
    return grid, np.argsort(grid, kind = "stable")


def _walk_worker(draw_for :Callable[[np.random.Generator], Draw],
                 x :float,
                 grid :np.ndarray,
                 order :np.ndarray,
                 absorbing :bool,
                 alpha :float = 0.0,
                 log_m :Optional[float] = None) -> Callable[[np.random.Generator, int], SurvivalTally]:
    """
    Worker over random-walk paths. absorbing: count nu_x > n; otherwise count S_n >= x.
    With log_m set, every counted path carries the weight m(alpha)^n e^{-alpha S_n}.
    """
    steps = np.rint(grid).astype(np.int64)
    last = int(steps.max())

    def record(tally :SurvivalTally, idx :int, n :int, sums :np.ndarray) -> None:
        weights = None if log_m is None else np.exp(n * log_m - alpha * sums)
        tally.record(idx, weights, len(sums))

    def worker(gen :np.random.Generator, count :int) -> SurvivalTally:
        draw = draw_for(gen)
        tally = SurvivalTally(len(grid))
        for size in _batches(count):
            tally.samples += size
            sums = np.zeros(size)
            alive = np.arange(size)
            g = 0
            for n in range(0, last + 1):
                if n > 0:
                    # Every path is absorbed
                    if absorbing and alive.size == 0:
                        break
                    # Step the live paths and drop those below -x
                    sums[alive] += draw(alive.size)
                    if absorbing:
                        alive = alive[sums[alive] >= -x]
                # Record every horizon equal to n
                while g < len(order) and steps[order[g]] == n:
                    counted = alive if absorbing else alive[sums[alive] >= x]
                    record(tally, int(order[g]), n, sums[counted])
                    g += 1
        return tally

    return worker


def _tilt_for(model :BaseDistribution, alpha :Optional[float]) -> Tuple[float, float]:
    """Tilt point and ln m(alpha): the exponential rate of the tail when it has one, else the Cramer point."""
    # Default tilt point
    if alpha is None:
        alpha = model.tilt_rate if model.tilt_rate is not None else solve_tilt(model).alpha
    # Check m(alpha) is finite
    m = model.mgf(alpha)[0]
    if not math.isfinite(m):
        raise ModelError(f"m({alpha:.6g}) is infinite for {model.name}!")
    return alpha, math.log(m)


def simulate_walk_passage(model :BaseDistribution,
                          x :float,
                          n_grid :Sequence[int],
                          samples :int,
                          rng :RNGSpec = RNGSpec(),
                          streams :int = 1,
                          workers :int = 1) -> PassageSimulation:
    """
    Plain estimates of P(nu_x > n) on a grid; the estimates share paths.
    :param model: Samplable increment law
    :type model: BaseDistribution
    :param x: Level, x >= 0
    :type x: float
    :param n_grid: Horizons
    :type n_grid: Sequence[int]
    :param samples: Number of paths
    :type samples: int
    :param rng: Seed and first stream
    :type rng: RNGSpec
    :param streams: Number of streams the paths are split over
    :type streams: int
    :param workers: Threads running the streams
    :type workers: int
    :return: PassageSimulation
    """
    grid, order = _grid_order(n_grid)
    # Absorbing walk under the law itself
    worker = _walk_worker(lambda gen: (lambda size: model.sample(gen, size)), x, grid, order, absorbing = True)
    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "plain")


def simulate_walk_passage_tilted(model :BaseDistribution,
                                 x :float,
                                 n_grid :Sequence[int],
                                 samples :int,
                                 rng :RNGSpec = RNGSpec(),
                                 alpha :Optional[float] = None,
                                 streams :int = 1,
                                 workers :int = 1) -> PassageSimulation:
    """
    Importance-sampling estimates of P(nu_x > n) under the alpha-tilted walk,
    weight m(alpha)^n e^{-alpha S_n} on surviving paths.
    """
    grid, order = _grid_order(n_grid)
    # Tilt point and its weight
    alpha, log_m = _tilt_for(model, alpha)
    worker = _walk_worker(lambda gen: (lambda size: model.tilted_sample(gen, size, alpha)),
                          x, grid, order, absorbing = True, alpha = alpha, log_m = log_m)
    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "tilted")


def simulate_walk_sum_tail(model :BaseDistribution,
                           x :float,
                           n_grid :Sequence[int],
                           samples :int,
                           rng :RNGSpec = RNGSpec(),
                           tilted :bool = False,
                           alpha :Optional[float] = None,
                           streams :int = 1,
                           workers :int = 1) -> PassageSimulation:
    """Estimates of P(S_n >= x), plain or under the alpha-tilted walk."""
    grid, order = _grid_order(n_grid)
    # Plain walk
    if not tilted:
        worker = _walk_worker(lambda gen: (lambda size: model.sample(gen, size)), x, grid, order, absorbing = False)
        return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "plain")
    # Tilted walk with weights at the horizon
    alpha, log_m = _tilt_for(model, alpha)
    worker = _walk_worker(lambda gen: (lambda size: model.tilted_sample(gen, size, alpha)),
                          x, grid, order, absorbing = False, alpha = alpha, log_m = log_m)
    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "tilted")


def simulate_walk_sum_tail_conditional(model :BaseDistribution,
                                       x :float,
                                       n_grid :Sequence[int],
                                       samples :int,
                                       rng :RNGSpec = RNGSpec(),
                                       alpha :Optional[float] = None,
                                       streams :int = 1,
                                       workers :int = 1) -> PassageSimulation:
    """
    Conditional Monte Carlo estimates of P(S_n >= x) for a continuous increment law.
    The largest increment is integrated out and the other n - 1 steps run under the alpha-tilted law:
    n m(alpha)^{n-1} e^{-alpha S_{n-1}} P(xi > max(M_{n-1}, x - S_{n-1})), M the largest of those steps.
    :param model: Continuous increment law with a tilted sampler at alpha
    :type model: BaseDistribution
    :param x: Threshold
    :type x: float
    :param n_grid: Horizons, n >= 1
    :type n_grid: Sequence[int]
    :param samples: Number of paths
    :type samples: int
    :param rng: Seed and first stream
    :type rng: RNGSpec
    :param alpha: Tilt point; the exponential rate of the tail by default
    :type alpha: Optional[float]
    :param streams: Number of streams the paths are split over
    :type streams: int
    :param workers: Threads running the streams
    :type workers: int
    :return: PassageSimulation with estimator "conditional"
    """
    # Check the law and the grid
    if model.lattice_span > 0:
        raise ModelError(f"Conditional estimates need a continuous law, {model.name} lives on a lattice!")
    grid, order = _grid_order(n_grid)
    steps = np.rint(grid).astype(np.int64)
    if np.any(steps < 1):
        raise ModelError("Conditional estimates need horizons n >= 1!")
    alpha, log_m = _tilt_for(model, alpha)
    last = int(steps.max())

    def log_tail(levels :np.ndarray) -> np.ndarray:
        return -np.fromiter((model.log_tail(float(y))[0] for y in levels), dtype = np.float64, count = len(levels))

    def worker(gen :np.random.Generator, count :int) -> SurvivalTally:
        tally = SurvivalTally(len(grid))
        for size in _batches(count):
            tally.samples += size
            sums = np.zeros(size)
            largest = np.full(size, -np.inf)
            g = 0
            for k in range(0, last):
                if k > 0:
                    draws = model.tilted_sample(gen, size, alpha)
                    sums += draws
                    largest = np.maximum(largest, draws)
                # Horizon k + 1 sees the first k steps
                while g < len(order) and steps[order[g]] == k + 1:
                    n = k + 1
                    levels = np.maximum(largest, x - sums)
                    weights = np.exp(math.log(n) + k * log_m - alpha * sums + log_tail(levels))
                    tally.record(int(order[g]), weights, int(np.count_nonzero(weights)))
                    g += 1
        return tally

    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "conditional")


def simulate_walk_nu_mean(model :BaseDistribution,
                          x :float,
                          samples :int,
                          rng :RNGSpec = RNGSpec(),
                          max_steps :int = _DEFAULT_MAX_STEPS,
                          streams :int = 1,
                          workers :int = 1) -> PassageSimulation:
    """
    Sample mean of nu_x with its standard error; paths still alive after max_steps are dropped with a warning.
    :return: PassageSimulation with an empty grid and the mean fields set
    """
    # Check drift
    if model.mean >= 0:
        raise InvalidDrift(f"Increment mean {model.mean:.6g} must be negative!")

    def worker(gen :np.random.Generator, count :int) -> SurvivalTally:
        tally = SurvivalTally(0)
        for size in _batches(count):
            tally.samples += size
            sums = np.zeros(size)
            alive = np.arange(size)
            for n in range(1, max_steps + 1):
                sums[alive] += model.sample(gen, alive.size)
                # Paths crossing at step n add n to the sample of nu_x
                crossed = sums[alive] < -x
                tally.add_values(np.full(int(crossed.sum()), float(n)))
                alive = alive[~crossed]
                if alive.size == 0:
                    break
            # Censored paths
            if alive.size:
                logger.warning("%d paths did not cross -%g within %d steps", alive.size, x, max_steps)
        return tally

    return _run_streams(worker, rng, samples, streams, workers).simulation([], rng.seed, "plain")


def tilted_min_functional_terms(model :BaseDistribution,
                                alpha :float,
                                x :float,
                                n_max :int,
                                samples :int,
                                rng :RNGSpec = RNGSpec()) -> Tuple[np.ndarray, np.ndarray]:
    """
    e^{gamma k} E[e^{alpha N_k}; N_k >= -x] = E~[e^{alpha (N_k - S_k)}; N_k >= -x] for k = 0 .. n_max,
    estimated under the alpha-tilted walk with e^{-gamma} = m(alpha).
    :return: Estimates and their standard errors
    """
    gen = spawn_generators(rng, 1)[0]
    total = np.zeros(n_max + 1)
    total_sq = np.zeros(n_max + 1)
    for size in _batches(samples):
        sums = np.zeros(size)
        minima = np.zeros(size)
        alive = np.arange(size)
        # T_0 = 1 on every path
        total[0] += size
        total_sq[0] += size
        for k in range(1, n_max + 1):
            if alive.size == 0:
                break
            # Step, update the running minimum and keep paths with N_k >= -x
            sums[alive] += model.tilted_sample(gen, alive.size, alpha)
            minima[alive] = np.minimum(minima[alive], sums[alive])
            alive = alive[minima[alive] >= -x]
            values = np.exp(alpha * (minima[alive] - sums[alive]))
            total[k] += values.sum()
            total_sq[k] += np.dot(values, values)
    # Return means and standard errors per k
    mean = total / samples
    stderr = np.sqrt(np.maximum(total_sq / samples - mean ** 2, 0.0) / samples)
    return mean, stderr


def _bp_worker(lam :float,
               service_draw :Callable[[np.random.Generator], Draw],
               x :float,
               grid :np.ndarray,
               track_mean :bool,
               max_events :int,
               alpha :float = 0.0,
               gamma :Optional[float] = None) -> Callable[[np.random.Generator, int], SurvivalTally]:
    """
    Event-driven busy periods from workload x: between arrivals the workload drains at unit rate,
    so the emptying time inside a gap is exact. With gamma set, survivors at t carry the weight
    e^{-alpha (W_t - x) - gamma t}.
    """
    horizon = float(grid.max())

    def worker(gen :np.random.Generator, count :int) -> SurvivalTally:
        draw = service_draw(gen)
        tally = SurvivalTally(len(grid))
        for size in _batches(count):
            tally.samples += size
            workload = np.full(size, float(x))
            clock = np.zeros(size)
            active = np.arange(size)
            for _ in range(max_events):
                if active.size == 0:
                    break
                # Next arrival gap; the period is busy until t0 + min(gap, w)
                gaps = gen.exponential(1.0 / lam, active.size)
                w, t0 = workload[active], clock[active]
                end = t0 + np.minimum(gaps, w)
                # Record the horizons inside the busy stretch
                for idx, tg in enumerate(grid):
                    inside = (t0 <= tg) & (tg < end)
                    if not inside.any():
                        continue
                    weights = None
                    if gamma is not None:
                        weights = np.exp(-alpha * (w[inside] - (tg - t0[inside]) - x) - gamma * tg)
                    tally.record(idx, weights, int(inside.sum()))
                # Periods that empty before the next arrival end here
                empties = w <= gaps
                if track_mean:
                    tally.add_values(t0[empties] + w[empties])
                # The others take the arrival's service
                keep = ~empties
                active = active[keep]
                clock[active] = t0[keep] + gaps[keep]
                workload[active] = w[keep] - gaps[keep] + draw(active.size)
                if not track_mean:
                    active = active[clock[active] <= horizon]
            # Censored periods
            if active.size:
                logger.warning("%d busy periods unfinished after %d events", active.size, max_events)
        return tally

    return worker


def simulate_bp(mg1,
                x :float,
                t_grid :Sequence[float],
                samples :int,
                rng :RNGSpec = RNGSpec(),
                streams :int = 1,
                workers :int = 1,
                track_mean :bool = True,
                max_events :int = _DEFAULT_MAX_EVENTS) -> PassageSimulation:
    """
    Plain estimates of P(bp(x) > t) and the sample mean of bp(x).
    :param mg1: Stable MG1Model
    :type mg1: MG1Model
    :param x: Initial workload, x > 0
    :type x: float
    :param t_grid: Horizons
    :type t_grid: Sequence[float]
    :param samples: Number of busy periods
    :type samples: int
    :param rng: Seed and first stream
    :type rng: RNGSpec
    :param streams: Number of streams
    :type streams: int
    :param workers: Threads running the streams
    :type workers: int
    :param track_mean: Run every busy period to its end to estimate E bp(x)
    :type track_mean: bool
    :param max_events: Cap on arrivals per batch
    :type max_events: int
    :return: PassageSimulation
    """
    # Check workload and load
    if x <= 0:
        raise ModelError(f"Initial workload must be positive, got {x}!")
    if mg1.load >= 1.0:
        raise InvalidDrift(f"Load {mg1.load:.6g} must be below 1!")
    grid, _ = _grid_order(t_grid)
    worker = _bp_worker(mg1.arrival_rate, lambda gen: (lambda size: mg1.service.sample(gen, size)),
                        x, grid, track_mean, max_events)
    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "plain")


def simulate_bp_tilted(mg1,
                       sol :CramerSolution,
                       x :float,
                       t_grid :Sequence[float],
                       samples :int,
                       rng :RNGSpec = RNGSpec(),
                       streams :int = 1,
                       workers :int = 1,
                       max_events :int = _DEFAULT_MAX_EVENTS) -> PassageSimulation:
    """
    Importance-sampling estimates of P(bp(x) > t) under the alpha-tilted compound Poisson law
    (arrival rate lambda m_B(alpha), services tilted by e^{alpha y}/m_B(alpha)), weighted at the horizon.
    :param mg1: Stable MG1Model
    :type mg1: MG1Model
    :param sol: Tilt solution of the induced increment
    :type sol: CramerSolution
    """
    # Check workload
    if x <= 0:
        raise ModelError(f"Initial workload must be positive, got {x}!")
    grid, _ = _grid_order(t_grid)
    # Tilted arrival rate
    alpha = sol.alpha
    rate = mg1.arrival_rate * mg1.service.mgf_value(alpha)
    worker = _bp_worker(rate, lambda gen: (lambda size: mg1.service.tilted_sample(gen, size, alpha)),
                        x, grid, False, max_events, alpha = alpha, gamma = sol.gamma)
    return _run_streams(worker, rng, samples, streams, workers).simulation(grid, rng.seed, "tilted")
