import math

import pytest

from passagetail.models import IncrementModel, MG1Model
from passagetail.types import LatticePMF, ExponentialFamily, ParetoLike, WeibullLike, LomaxLike, TiltedHeavy, RNGSpec
from passagetail.cramer_engine import solve_tilt, solve_tilt_mg1, petrov_tail, solve_intermediate, intermediate_tail
from passagetail.heavy_engine import heavy2_tail
from passagetail.oracle import lattice_walk_from_model, exact_passage, exact_sn_dist
from passagetail.passage import v_subexp, v_cramer_mg1, v_rw_series, passage_tail_rw, passage_tail_levy, bp_tail
from passagetail.exceptions import ZeroLevel, RegimeMismatch, InvalidHorizon, ModelError

PM1_WALK = IncrementModel(LatticePMF(offsets = [-1, 1], masses = [0.6, 0.4]))
MM1 = MG1Model(arrival_rate = 1.0, service = ExponentialFamily(rate = 2.0))
PARETO_QUEUE = MG1Model(arrival_rate = 0.5, service = ParetoLike(index = 3.0))
WEIBULL_WALK = IncrementModel(WeibullLike(shape = 0.6), shift = -3.0)
INTERMEDIATE_WALK = IncrementModel(TiltedHeavy(alpha = 1.0, base = LomaxLike(index = 4.0)), shift = -1.0)


def test_v_cramer_mg1_closed_form():
    sol = solve_tilt_mg1(MM1)
    v = v_cramer_mg1(sol.alpha, sol.gamma, 1.0)
    assert v.value == pytest.approx((2.0 + math.sqrt(2.0)) * math.exp(2.0 - math.sqrt(2.0)), rel = 1e-10)
    assert v.method == "closed_form"
    assert v_cramer_mg1(sol.alpha, sol.gamma, 0.0).value == 0.0


def test_v_subexp_busy_period_mean():
    v = v_subexp(MM1, 2.0)
    assert v.value == pytest.approx(4.0)
    with pytest.raises(ZeroLevel):
        v_subexp(MM1, 0.0)


@pytest.mark.parametrize("x, expected", [(0.0, 5.0), (2.0, 15.0), (2.5, 15.0)])
def test_v_subexp_lattice_matches_wald(x, expected):
    v = v_subexp(PM1_WALK, x)
    assert v.method == "dp_sum"
    assert v.value == pytest.approx(expected, rel = 1e-8)


def test_v_rw_series_lattice():
    sol = solve_tilt(PM1_WALK)
    for x in (0.0, 1.0, 3.0):
        v = v_rw_series(PM1_WALK, sol.alpha, sol.gamma, x)
        assert v.method == "dp_series"
        assert v.value >= math.exp(sol.alpha * x)
        assert v.truncation_K >= 256
        assert v.remainder_bound >= 0.0


def test_v_rw_series_rejects_bad_arguments():
    with pytest.raises(ModelError):
        v_rw_series(PM1_WALK, 0.0, 0.1, 0.0)
    with pytest.raises(ModelError):
        v_rw_series(PM1_WALK, 0.1, 0.1, -1.0)


def test_cramer_walk_against_exact_passage():
    walk = lattice_walk_from_model(PM1_WALK)
    ratios = []
    for n in (200, 400, 800, 1600):
        estimate = passage_tail_rw(PM1_WALK, 2.0, n, "Cramer")
        assert "lattice_correction" in estimate.validity_flags
        assert estimate.reconstruct() == pytest.approx(estimate.value, rel = 1e-12)
        ratios.append(exact_passage(walk, 2.0, n) / estimate.value)
    assert abs(ratios[-1] - 1.0) <= 0.05
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)


def test_v_rw_series_settles_on_the_walk_at_level_two():
    sol = solve_tilt(PM1_WALK)
    v = v_rw_series(PM1_WALK, sol.alpha, sol.gamma, 2.0)
    assert v.method == "dp_series"
    assert math.isfinite(v.value) and v.value >= math.exp(2.0 * sol.alpha)
    assert v.truncation_K <= 10 ** 4


def test_v_rw_series_matches_oracle_ratio():
    walk = lattice_walk_from_model(PM1_WALK)
    sol = solve_tilt(PM1_WALK)
    v = v_rw_series(PM1_WALK, sol.alpha, sol.gamma, 2.0).value
    # n P(nu_x > n) / P(S_n >= 0) tends to V_rw(x) with an O(1/n) gap
    ratio = {n: n * exact_passage(walk, 2.0, n) / exact_sn_dist(walk, n).sf(0.0) for n in (800, 1600)}
    assert abs(ratio[1600] - v) < abs(ratio[800] - v)
    assert 2.0 * ratio[1600] - ratio[800] == pytest.approx(v, rel = 2e-2)


def test_heavy_walk_uses_simulated_mean():
    model = IncrementModel(ParetoLike(index = 3.0), shift = -3.0)
    estimate = passage_tail_rw(model, 1.0, 100, "HeavyI", samples = 2000, rng = RNGSpec(seed = 11))
    assert estimate.prefactor.method == "mc_mean"
    assert estimate.prefactor.stderr > 0
    assert estimate.value == pytest.approx(estimate.prefactor.value * model.tail(150.0), rel = 1e-12)


def test_passage_rejects_zero_horizon():
    with pytest.raises(InvalidHorizon):
        passage_tail_rw(PM1_WALK, 0.0, 0, "Cramer")
    with pytest.raises(InvalidHorizon):
        passage_tail_levy(MM1, 1.0, 0.5, "Cramer")


def test_levy_interpolation_between_integers():
    sol = solve_tilt_mg1(MM1)
    v = v_cramer_mg1(sol.alpha, sol.gamma, 1.0).value
    estimate = passage_tail_levy(MM1, 1.0, 40.5, "Cramer")
    assert estimate.interpolation_factor == pytest.approx(math.exp(-0.5 * sol.gamma), rel = 1e-14)
    assert estimate.horizon == 40.5
    assert estimate.value == pytest.approx(v * math.exp(-0.5 * sol.gamma) * petrov_tail(sol, 40) / 40.5, rel = 1e-12)
    assert estimate.reconstruct() == pytest.approx(estimate.value, rel = 1e-12)
    assert passage_tail_levy(MM1, 1.0, 40.0, "Cramer").interpolation_factor == 1.0


def test_levy_jump_at_integer_horizon():
    left = passage_tail_levy(MM1, 1.0, 40.0 - 1e-9, "Cramer").value
    right = passage_tail_levy(MM1, 1.0, 40.0, "Cramer").value
    assert left / right == pytest.approx(math.sqrt(40.0 / 39.0), rel = 1e-6)


def test_bp_heavy_i():
    # x/(1 - rho) * lambda * P(B > (1 - rho) t)
    estimate = bp_tail(PARETO_QUEUE, 1.0, 400.0, "HeavyI")
    assert estimate.value == pytest.approx(2e-6, rel = 1e-10)
    assert estimate.prefactor.value == pytest.approx(4.0)


@pytest.mark.parametrize("x, t", [(0.5, 10.0), (1.0, 50.0), (3.0, 200.0)])
def test_bp_cramer_closed_form(x, t):
    sol = solve_tilt_mg1(MM1)
    mu = 2.0
    sigma_hat = math.sqrt(2.0 * mu / (mu - sol.alpha) ** 3)
    expected = x * math.exp(sol.alpha * x - sol.gamma * t) / (math.sqrt(2.0 * math.pi) * sigma_hat * sol.gamma * t ** 1.5)
    estimate = bp_tail(MM1, x, t, "Cramer")
    assert estimate.value == pytest.approx(expected, rel = 1e-10)
    assert estimate.reconstruct() == pytest.approx(estimate.value, rel = 1e-12)


def test_bp_preconditions():
    with pytest.raises(ZeroLevel):
        bp_tail(MM1, 0.0, 10.0, "Cramer")
    with pytest.raises(InvalidHorizon):
        bp_tail(MM1, 1.0, 0.5, "Cramer")


@pytest.mark.parametrize("mg1, regime", [(MM1, "HeavyI"), (MM1, "HeavyII"), (MM1, "Intermediate"),
                                         (PARETO_QUEUE, "Cramer")])
def test_bp_regime_mismatch(mg1, regime):
    with pytest.raises(RegimeMismatch):
        bp_tail(mg1, 1.0, 10.0, regime)


def test_heavy_ii_walk_keeps_the_log_scale():
    rng = RNGSpec(seed = 13)
    far = passage_tail_rw(WEIBULL_WALK, 1.0, 100000, "HeavyII", samples = 2000, rng = rng)
    tail = heavy2_tail(WEIBULL_WALK, 100000)
    assert math.isfinite(far.log_value)
    expected = math.log(far.prefactor.value) + tail.log_value - math.log(100000)
    assert far.log_value == pytest.approx(expected, rel = 1e-12)
    near = passage_tail_rw(WEIBULL_WALK, 1.0, 1000, "HeavyII", samples = 2000, rng = rng)
    assert near.value > 0
    assert near.value == pytest.approx(math.exp(near.log_value), rel = 1e-10)


def test_intermediate_walk_uses_simulated_series():
    sol = solve_intermediate(INTERMEDIATE_WALK)
    estimate = passage_tail_rw(INTERMEDIATE_WALK, 1.0, 30, "Intermediate", samples = 2000, rng = RNGSpec(seed = 12))
    assert estimate.prefactor.method == "mc_series"
    assert estimate.prefactor.value >= math.exp(sol.alpha * 1.0)
    expected = estimate.prefactor.value * intermediate_tail(sol, 30, 0.0) / 30
    assert estimate.value == pytest.approx(expected, rel = 1e-12)
