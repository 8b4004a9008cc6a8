import math

import numpy as np
import pytest

from passagetail.models import IncrementModel, MG1Model
from passagetail.types import LatticePMF, ExponentialFamily, ParetoLike, WeibullLike, LomaxLike, TiltedHeavy, RNGSpec
from passagetail.cramer_engine import solve_tilt, solve_tilt_mg1, solve_intermediate, intermediate_tail
from passagetail.oracle import lattice_walk_from_model, exact_passage, exact_sn_dist, min_functional_terms
from passagetail.passage import bp_tail
from passagetail.mc import (spawn_generators, SurvivalTally, simulate_walk_passage, simulate_walk_passage_tilted,
                            simulate_walk_sum_tail, simulate_walk_sum_tail_conditional, simulate_walk_nu_mean,
                            tilted_min_functional_terms, simulate_bp, simulate_bp_tilted)
from passagetail.exceptions import TiltUnavailable, ModelError

PM1_WALK = IncrementModel(LatticePMF(offsets = [-1, 1], masses = [0.6, 0.4]))
WALK = lattice_walk_from_model(PM1_WALK)
MM1 = MG1Model(arrival_rate = 1.0, service = ExponentialFamily(rate = 2.0))
INTERMEDIATE_WALK = IncrementModel(TiltedHeavy(alpha = 1.0, base = LomaxLike(index = 4.0)), shift = -1.0)
PARETO_QUEUE = MG1Model(arrival_rate = 0.5, service = ParetoLike(index = 3.0))


def _within(result, expected, sigmas = 4.0):
    return abs(result.estimate - expected) <= sigmas * result.stderr


def test_streams_do_not_depend_on_count():
    late = spawn_generators(RNGSpec(seed = 5, stream = 2), 1)[0].random(8)
    full = spawn_generators(RNGSpec(seed = 5), 3)[2].random(8)
    np.testing.assert_array_equal(late, full)


def test_tally_merge_adds_statistics():
    left, right = SurvivalTally(2), SurvivalTally(2)
    left.samples, right.samples = 10, 30
    left.record(0, np.array([0.5, 0.25]), 2)
    right.record(1, np.array([1.0]), 1)
    right.add_values(np.array([2.0, 4.0]))
    merged = left.merge(right)
    assert merged.samples == 40
    np.testing.assert_array_equal(merged.hits, [2, 1])
    np.testing.assert_allclose(merged.weight_sum, [0.75, 1.0])
    np.testing.assert_allclose(merged.weight_sq, [0.3125, 1.0])
    assert merged.value_count == 2 and merged.value_sum == 6.0


def test_walk_passage_is_reproducible():
    first = simulate_walk_passage(PM1_WALK, 1.0, [5, 20], 5000, RNGSpec(seed = 42), streams = 4, workers = 2)
    second = simulate_walk_passage(PM1_WALK, 1.0, [5, 20], 5000, RNGSpec(seed = 42), streams = 4)
    assert first == second


def test_walk_passage_plain():
    sim = simulate_walk_passage(PM1_WALK, 2.0, [50, 0, 1], 20000, RNGSpec(seed = 3))
    at_50, at_0, at_1 = sim.results
    assert at_0.estimate == 1.0 and at_0.horizon == 0.0
    assert at_1.estimate == 1.0
    assert at_50.samples == 20000
    assert _within(at_50, exact_passage(WALK, 2.0, 50))
    assert at_50.ci95[0] < at_50.estimate < at_50.ci95[1]


def test_one_step_survival_is_bernoulli():
    result = simulate_walk_passage(PM1_WALK, 0.0, [1], 20000, RNGSpec(seed = 8)).results[0]
    assert result.stderr == pytest.approx(math.sqrt(result.estimate * (1 - result.estimate) / 20000))
    assert _within(result, 0.4)


def test_tilted_walk_passage():
    exact = exact_passage(WALK, 0.0, 50)
    result = simulate_walk_passage_tilted(PM1_WALK, 0.0, [50], 20000, RNGSpec(seed = 4)).results[0]
    assert result.estimator == "tilted"
    assert _within(result, exact)


def test_sum_tail_plain_and_tilted():
    exact = exact_sn_dist(WALK, 20).sf(0.0)
    plain = simulate_walk_sum_tail(PM1_WALK, 0.0, [20], 20000, RNGSpec(seed = 6)).results[0]
    tilted = simulate_walk_sum_tail(PM1_WALK, 0.0, [20], 20000, RNGSpec(seed = 6), tilted = True).results[0]
    assert _within(plain, exact)
    assert _within(tilted, exact)


def test_nu_mean_matches_wald():
    sim = simulate_walk_nu_mean(PM1_WALK, 0.0, 20000, RNGSpec(seed = 9))
    assert sim.results == []
    assert abs(sim.mean - 5.0) <= 4.0 * sim.mean_stderr


def test_tilted_min_functional_terms():
    sol = solve_tilt(PM1_WALK)
    mean, stderr = tilted_min_functional_terms(PM1_WALK, sol.alpha, 1.0, 30, 20000, RNGSpec(seed = 10))
    assert mean[0] == 1.0
    exact = min_functional_terms(WALK, sol.alpha, 1.0, 30) * np.exp(sol.gamma * np.arange(31))
    for k in (1, 10, 30):
        assert abs(mean[k] - exact[k]) <= 4.0 * stderr[k] + 1e-12


def test_intermediate_tilt_against_plain():
    plain = simulate_walk_passage(INTERMEDIATE_WALK, 1.0, [5], 40000, RNGSpec(seed = 12)).results[0]
    tilted = simulate_walk_passage_tilted(INTERMEDIATE_WALK, 1.0, [5], 40000, RNGSpec(seed = 13)).results[0]
    assert abs(plain.estimate - tilted.estimate) <= 5.0 * math.hypot(plain.stderr, tilted.stderr)


def test_tilt_unavailable():
    gen = spawn_generators(RNGSpec(seed = 1), 1)[0]
    with pytest.raises(TiltUnavailable):
        IncrementModel(WeibullLike(shape = 0.6), shift = -3.0).tilted_sample(gen, 10, 0.1)
    with pytest.raises(TiltUnavailable):
        INTERMEDIATE_WALK.tilted_sample(gen, 10, 0.5)


def test_empty_grid_is_rejected():
    with pytest.raises(ModelError):
        simulate_walk_passage(PM1_WALK, 0.0, [], 100)


def test_busy_period_mean_and_origin():
    sim = simulate_bp(MM1, 1.0, [0.0, 5.0], 20000, RNGSpec(seed = 1))
    assert sim.results[0].estimate == 1.0
    # E bp(x) = x / (1 - rho)
    assert abs(sim.mean - 2.0) <= 4.0 * sim.mean_stderr


def test_busy_period_tilted_against_plain():
    sol = solve_tilt_mg1(MM1)
    plain = simulate_bp(MM1, 1.0, [5.0], 20000, RNGSpec(seed = 2), track_mean = False).results[0]
    tilted = simulate_bp_tilted(MM1, sol, 1.0, [5.0], 20000, RNGSpec(seed = 3)).results[0]
    assert abs(plain.estimate - tilted.estimate) <= 5.0 * math.hypot(plain.stderr, tilted.stderr)


def test_confidence_interval_coverage():
    truth = 0.4
    covered = 0
    for stream in range(200):
        result = simulate_walk_passage(PM1_WALK, 0.0, [1], 500, RNGSpec(seed = 99, stream = stream)).results[0]
        covered += result.ci95[0] <= truth <= result.ci95[1]
    assert 175 <= covered <= 200


@pytest.mark.slow
def test_busy_period_cramer_asymptotics():
    sol = solve_tilt_mg1(MM1)
    sim = simulate_bp_tilted(MM1, sol, 1.0, [100.0, 200.0], 40000, RNGSpec(seed = 21), streams = 4, workers = 4)
    ratios = [r.estimate / bp_tail(MM1, 1.0, r.horizon, "Cramer").value for r in sim.results]
    assert abs(ratios[1] - 1.0) <= 0.15
    assert abs(ratios[1] - 1.0) <= abs(ratios[0] - 1.0) + 0.02


@pytest.mark.parametrize("x", [0.0, 1.0, 2.0, 4.0])
def test_walk_passage_against_exact_grid(x):
    steps = [3, 10, 25, 60, 150]
    sim = simulate_walk_passage(PM1_WALK, x, steps, 20000, RNGSpec(seed = 30 + int(x)))
    for result, n in zip(sim.results, steps):
        assert abs(result.estimate - exact_passage(WALK, x, n)) <= 3.0 * result.stderr + 1e-12


def test_conditional_sum_tail_single_step_is_exact():
    result = simulate_walk_sum_tail_conditional(INTERMEDIATE_WALK, 0.5, [1], 1000, RNGSpec(seed = 14)).results[0]
    assert result.estimator == "conditional"
    assert result.estimate == pytest.approx(INTERMEDIATE_WALK.tail(0.5), rel = 1e-12)
    assert result.stderr == pytest.approx(0.0, abs = 1e-8)


def test_conditional_sum_tail_against_tilted():
    tilted = simulate_walk_sum_tail(INTERMEDIATE_WALK, 0.0, [5], 40000, RNGSpec(seed = 15), tilted = True).results[0]
    conditional = simulate_walk_sum_tail_conditional(INTERMEDIATE_WALK, 0.0, [5], 40000, RNGSpec(seed = 16),
                                                     streams = 2, workers = 2).results[0]
    assert abs(conditional.estimate - tilted.estimate) <= 5.0 * math.hypot(conditional.stderr, tilted.stderr)


def test_conditional_sum_tail_preconditions():
    with pytest.raises(ModelError):
        simulate_walk_sum_tail_conditional(PM1_WALK, 0.0, [5], 100)
    with pytest.raises(ModelError):
        simulate_walk_sum_tail_conditional(INTERMEDIATE_WALK, 0.0, [0, 5], 100)


def test_intermediate_asymptote_against_simulation():
    sol = solve_intermediate(INTERMEDIATE_WALK)
    sim = simulate_walk_sum_tail_conditional(INTERMEDIATE_WALK, 0.0, [30, 120], 20000, RNGSpec(seed = 17))
    ratios = [r.estimate / intermediate_tail(sol, int(r.horizon), 0.0) for r in sim.results]
    # Leading term misses a (1 + 1/n)^4 (1 + 4/(n delta)) factor of this model
    assert abs(ratios[1] - 1.0) <= 0.3
    assert abs(ratios[1] - 1.0) < abs(ratios[0] - 1.0)


@pytest.mark.slow
def test_busy_period_cramer_against_plain_simulation():
    sim = simulate_bp(MM1, 1.0, [20.0, 30.0, 40.0], 10 ** 7, RNGSpec(seed = 22), streams = 8, workers = 4,
                      track_mean = False)
    rows = [(r, r.estimate / bp_tail(MM1, 1.0, r.horizon, "Cramer").value) for r in sim.results if r.hits >= 300]
    assert len(rows) >= 2
    for _, ratio in rows:
        assert 0.7 <= ratio <= 1.3
    (first, early), (last, late) = rows[0], rows[-1]
    slack = 3.0 * math.hypot(first.stderr / first.estimate, last.stderr / last.estimate)
    assert abs(late - 1.0) <= abs(early - 1.0) + slack


@pytest.mark.slow
def test_busy_period_heavy_i_against_plain_simulation():
    sim = simulate_bp(PARETO_QUEUE, 1.0, [50.0, 100.0, 150.0], 10 ** 7, RNGSpec(seed = 23), streams = 8,
                      workers = 4, track_mean = False)
    assert all(r.hits >= 300 for r in sim.results)
    ratios = [r.estimate / bp_tail(PARETO_QUEUE, 1.0, r.horizon, "HeavyI").value for r in sim.results]
    # Drain-time variance lambda E[B^2] / (1 - rho)^3 keeps the ratio above 1 at reachable t
    assert all(ratio > 1.0 for ratio in ratios)
    assert ratios[0] > ratios[1] > ratios[2]
