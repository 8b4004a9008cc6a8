import math

import numpy as np
import pytest

from passagetail.models import IncrementModel, MG1Model
from passagetail.types import WeibullLike, ParetoLike, ExponentialFamily, LatticePMF
from passagetail.heavy_engine import (heavy1_tail, compute_k, cramer_series, build_context, R_eval, eta, newton_y,
                                      heavy2_tail, heavy2_first_iterate, weibull_expansion)
from passagetail.oracle import lattice_walk_from_model, exact_sn_dist
from passagetail.exceptions import ModelError, Unsupported, MissingCumulant, InvalidDrift, InvalidHorizon

WEIBULL_WALK = IncrementModel(WeibullLike(shape = 0.6), shift = -3.0)
PARETO_QUEUE = MG1Model(arrival_rate = 0.5, service = ParetoLike(index = 3.0))


def test_heavy1_tail_of_pareto_queue():
    # lambda P(B > (1 - rho) n) * n with rho = 0.75
    assert PARETO_QUEUE.load == pytest.approx(0.75)
    assert heavy1_tail(PARETO_QUEUE, 400) == pytest.approx(400 * 0.5 * 100.0 ** -3, rel = 1e-12)


def test_heavy1_tail_preconditions():
    with pytest.raises(InvalidHorizon):
        heavy1_tail(WEIBULL_WALK, 0)
    with pytest.raises(InvalidDrift):
        heavy1_tail(IncrementModel(ParetoLike(index = 3.0)), 10)


def _discretised_pareto(top :int, shift :int) -> IncrementModel:
    # ceil(B) for P(B > y) = y^-3, cut at top
    k = np.arange(2, top + 1)
    masses = (k - 1.0) ** -3 - k ** -3.0
    return IncrementModel(LatticePMF(offsets = (k + shift).tolist(), masses = (masses / masses.sum()).tolist()))


def test_heavy1_tail_against_lattice_oracle():
    model = _discretised_pareto(2000, -6)
    n = 200
    exact = exact_sn_dist(lattice_walk_from_model(model), n).sf(0.0)
    assert exact / heavy1_tail(model, n) == pytest.approx(1.0, abs = 0.15)


@pytest.mark.parametrize("beta, k", [(0.4, 0), (0.55, 1), (0.6, 1), (0.7, 2), (0.74, 2)])
def test_compute_k(beta, k):
    assert compute_k(beta) == k


def test_compute_k_rejects_large_k_and_bad_beta():
    with pytest.raises(Unsupported):
        compute_k(0.8)
    with pytest.raises(ModelError):
        compute_k(1.0)


def test_cramer_series_is_standardised():
    k3, k4 = WEIBULL_WALK.cumulants()
    sigma = math.sqrt(WEIBULL_WALK.variance)
    lambdas = cramer_series(WEIBULL_WALK, 2)
    assert lambdas[0] == pytest.approx(k3 / sigma ** 3 / 6.0, rel = 1e-10)
    assert lambdas[1] == pytest.approx((k4 / sigma ** 4 - 3.0 * (k3 / sigma ** 3) ** 2) / 24.0, rel = 1e-10)
    assert cramer_series(WEIBULL_WALK, 0) == ()


def test_cramer_series_needs_cumulants():
    with pytest.raises(MissingCumulant):
        cramer_series(IncrementModel(ParetoLike(index = 2.5), shift = -3.0), 1)


def test_r_derivatives_match_finite_differences():
    ctx = build_context(WEIBULL_WALK, 1e4)
    y, h = 0.9 * ctx.t, 1e-3
    r, r1, r2 = R_eval(ctx, y)
    assert r1 == pytest.approx((R_eval(ctx, y + h)[0] - R_eval(ctx, y - h)[0]) / (2 * h), rel = 1e-5)
    assert r2 == pytest.approx((R_eval(ctx, y + h)[1] - R_eval(ctx, y - h)[1]) / (2 * h), rel = 1e-4)


def test_eta_solves_its_equation():
    g = lambda y: y ** 0.6
    z = 1e4
    root = eta(g, z)
    assert root ** 2 / g(root) == pytest.approx(z, rel = 1e-9)


@pytest.mark.parametrize("n", [1e3, 1e4, 1e5])
def test_newton_point_is_grid_minimum(n):
    ctx = build_context(WEIBULL_WALK, n)
    result = newton_y(ctx)
    assert result.residual <= 1e-6
    assert result.y_final <= ctx.t - math.sqrt(n)
    grid = np.linspace(0.5 * ctx.t, ctx.t, 20001)
    brute = min(R_eval(ctx, y)[0] for y in grid)
    estimate = heavy2_tail(WEIBULL_WALK, n)
    # The value itself underflows at n = 1e5
    assert math.log(n) - estimate.log_value == pytest.approx(brute, rel = 1e-6)
    assert estimate.reconstruct() == pytest.approx(estimate.value, rel = 1e-14)


def test_threshold_insensitivity_shrinks():
    gaps = []
    for n in (1e3, 1e4, 1e5):
        base = heavy2_tail(WEIBULL_WALK, n).log_value
        moved = heavy2_tail(WEIBULL_WALK, n, x = n ** 0.3).log_value
        gaps.append(abs(base - moved))
    assert gaps[0] > gaps[1] > gaps[2]


def test_curvature_and_first_iterate_variants():
    ctx = build_context(WEIBULL_WALK, 1e4)
    plain = heavy2_tail(WEIBULL_WALK, 1e4)
    refined = heavy2_tail(WEIBULL_WALK, 1e4, curvature = True)
    first = heavy2_first_iterate(ctx)
    assert "curvature" in refined.validity_flags
    assert "first_iterate" in first.validity_flags
    r2 = R_eval(ctx, newton_y(ctx).y_final)[2]
    assert refined.value == pytest.approx(plain.value / math.sqrt(1e4 * r2), rel = 1e-10)
    # The first iterate is close to the converged exponent
    assert first.log_value == pytest.approx(plain.log_value, rel = 1e-2)


def test_heavy2_on_light_model_has_no_index():
    with pytest.raises(ModelError):
        heavy2_tail(IncrementModel(ExponentialFamily(rate = 1.0), shift = -2.0), 1e3)


def test_weibull_expansion_reconstructs_tail():
    fit = weibull_expansion(WEIBULL_WALK)
    assert fit.k == 1
    assert fit.ladder[0] > 0
    assert fit.relative_residual <= 1e-4
    estimates = [heavy2_tail(WEIBULL_WALK, n) for n in fit.n_values]
    scale = max(math.log(n) - e.log_value for n, e in zip(fit.n_values, estimates))
    for n, estimate in zip(fit.n_values, estimates):
        assert abs(fit.log_value(n) - estimate.log_value) <= fit.relative_residual * scale * (1 + 1e-6) + 1e-9
