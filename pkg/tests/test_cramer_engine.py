import math

import pytest

from passagetail.models import IncrementModel, MG1Model, induced_increment
from passagetail.types import LatticePMF, ExponentialFamily, ParetoLike, LomaxLike, TiltedHeavy
from passagetail.cramer_engine import solve_tilt, solve_tilt_mg1, petrov_tail, solve_intermediate, intermediate_tail
from passagetail.oracle import lattice_walk_from_model, exact_sn_dist
from passagetail.exceptions import (InvalidDrift, HeavyTail, IntermediateCase, CramerInstead, OutsideUniformRange,
                                    InvalidHorizon)

PM1_WALK = IncrementModel(LatticePMF(offsets = [-1, 1], masses = [0.6, 0.4]))
EXP_WALK = IncrementModel(ExponentialFamily(rate = 2.0), shift = -1.0)
MM1 = MG1Model(arrival_rate = 1.0, service = ExponentialFamily(rate = 2.0))
INTERMEDIATE_WALK = IncrementModel(TiltedHeavy(alpha = 1.0, base = LomaxLike(index = 4.0)), shift = -1.0)

PM1_ALPHA = math.log(1.5) / 2.0
PM1_GAMMA = -math.log(2.0 * math.sqrt(0.24))
MM1_ALPHA = 2.0 - math.sqrt(2.0)
MM1_GAMMA = 3.0 - 2.0 * math.sqrt(2.0)


def test_lattice_tilt_closed_form():
    sol = solve_tilt(PM1_WALK)
    assert sol.alpha == pytest.approx(PM1_ALPHA, abs = 1e-10)
    assert sol.gamma == pytest.approx(PM1_GAMMA, abs = 1e-10)
    assert sol.sigma_hat == pytest.approx(1.0, rel = 1e-10)
    assert sol.bracket[0] <= sol.alpha <= sol.bracket[1]


def test_mm1_tilt_both_ways():
    service_side = solve_tilt_mg1(MM1)
    induced = solve_tilt(induced_increment(MM1))
    assert service_side.alpha == pytest.approx(MM1_ALPHA, abs = 1e-10)
    assert service_side.gamma == pytest.approx(MM1_GAMMA, abs = 1e-10)
    assert induced.alpha == pytest.approx(service_side.alpha, abs = 1e-10)
    assert induced.gamma == pytest.approx(service_side.gamma, abs = 1e-10)
    assert service_side.sigma_hat ** 2 == pytest.approx(2.0 * 2.0 / (2.0 - MM1_ALPHA) ** 3, rel = 1e-10)


@pytest.mark.parametrize("model", [PM1_WALK, EXP_WALK, induced_increment(MM1)])
def test_gamma_is_minus_log_mgf_at_alpha(model):
    sol = solve_tilt(model)
    assert math.exp(-sol.gamma) == pytest.approx(model.mgf(sol.alpha)[0], rel = 1e-12)
    assert abs(model.mgf(sol.alpha)[1]) <= 1e-10


def test_positive_drift_is_rejected():
    with pytest.raises(InvalidDrift):
        solve_tilt(IncrementModel(LatticePMF(offsets = [-1, 1], masses = [0.4, 0.6])))


def test_heavy_tail_has_no_tilt():
    with pytest.raises(HeavyTail):
        solve_tilt(IncrementModel(ParetoLike(index = 3.0), shift = -2.0))


def test_no_interior_point_is_intermediate():
    with pytest.raises(IntermediateCase):
        solve_tilt(INTERMEDIATE_WALK)


def test_petrov_non_lattice_formula():
    sol = solve_tilt(EXP_WALK)
    n = 50
    expected = math.exp(-sol.gamma * n) / (sol.alpha * sol.sigma_hat * math.sqrt(2.0 * math.pi * n))
    assert petrov_tail(sol, n) == pytest.approx(expected, rel = 1e-14)
    assert petrov_tail(sol, n, y = 1.0) == pytest.approx(expected * math.exp(-sol.alpha), rel = 1e-14)


@pytest.mark.parametrize("n, tol", [(100, 0.2), (1600, 0.05)])
def test_lattice_petrov_against_exact(n, tol):
    sol = solve_tilt(PM1_WALK)
    exact = exact_sn_dist(lattice_walk_from_model(PM1_WALK), n).sf(0.0)
    approx = petrov_tail(sol, n, 0.0, PM1_WALK.lattice_span, PM1_WALK.lattice_offset)
    assert approx / exact == pytest.approx(1.0, abs = tol)


def test_petrov_rejects_zero_horizon():
    with pytest.raises(InvalidHorizon):
        petrov_tail(solve_tilt(PM1_WALK), 0)


def test_intermediate_solution():
    sol = solve_intermediate(INTERMEDIATE_WALK)
    assert sol.alpha == 1.0
    assert sol.m_alpha == pytest.approx(4.0 / (3.0 * math.e), rel = 1e-7)
    assert sol.delta == pytest.approx(5.0 / 8.0, rel = 1e-7)
    assert sol.gamma == pytest.approx(1.0 - math.log(4.0 / 3.0), rel = 1e-7)
    # Gbar(y) = e^{alpha y} P(xi > y) = e^{-1} (1 + y + 1)^{-4} for y > -1
    assert sol.gbar(2.0) == pytest.approx(math.exp(-1.0) * 4.0 ** -4, rel = 1e-12)


def test_intermediate_with_small_shift_is_cramer():
    model = IncrementModel(TiltedHeavy(alpha = 1.0, base = LomaxLike(index = 4.0)), shift = -0.3)
    with pytest.raises(CramerInstead):
        solve_intermediate(model)


def test_intermediate_tail_formula_and_range():
    sol = solve_intermediate(INTERMEDIATE_WALK)
    n, x = 30, 2.0
    expected = math.exp(-sol.gamma * n - sol.alpha * x) * n * sol.gbar(x + n * sol.delta) / sol.m_alpha
    assert intermediate_tail(sol, n, x) == pytest.approx(expected, rel = 1e-14)
    with pytest.raises(OutsideUniformRange):
        intermediate_tail(sol, n, -n * sol.delta)
