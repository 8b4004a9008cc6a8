import math

import numpy as np
import pytest

from passagetail.models import IncrementModel
from passagetail.types import LatticePMF, SequenceBlock
from passagetail.cramer_engine import solve_tilt
from passagetail.oracle import lattice_walk_from_model
from passagetail.classcheck import ratio_test, conv_test, classify, builtin_sequence, sum_tail_source, cond_ratio_test
from passagetail.exceptions import NonPositive, SequenceOverflow

PM1_WALK = IncrementModel(LatticePMF(offsets = [-1, 1], masses = [0.6, 0.4]))


def test_power_sequence_is_consistent():
    logs, start = builtin_sequence(SequenceBlock(builtin = "power"))
    assert start == 1
    diagnostic = classify(logs, 0.0, 10000, start, log_terms = True)
    assert diagnostic.verdict == "consistent"
    assert diagnostic.ratio_trajectory[-1][0] == 10000
    assert diagnostic.gamma_hat == pytest.approx(0.0, abs = 1e-3)


def test_petrov_sequence_recovers_gamma():
    logs, start = builtin_sequence(SequenceBlock(builtin = "petrov", gamma = 0.5))
    diagnostic = classify(logs, 0.5, 10000, start, log_terms = True)
    assert diagnostic.verdict == "consistent"
    assert diagnostic.gamma_hat == pytest.approx(0.5, abs = 1e-3)


def test_gaussian_sequence_is_inconsistent():
    logs, start = builtin_sequence(SequenceBlock(builtin = "gaussian", max_n = 200))
    assert start == 0
    assert ratio_test(logs, 0.0, 200, start, log_terms = True).verdict == "inconsistent"
    assert classify(logs, 0.0, 200, start, log_terms = True).verdict == "inconsistent"


def test_constant_sequence_fails_convolution():
    logs, start = builtin_sequence(SequenceBlock(builtin = "constant", max_n = 1000))
    assert ratio_test(logs, 0.0, 1000, start, log_terms = True).verdict == "consistent"
    # a*2_n / a_n = n + 1 is half of 2 sum_{i <= n} a_i
    assert conv_test(logs, 0.0, 1000, start, log_terms = True).verdict == "inconsistent"


def test_convolution_limit_of_inverse_squares():
    diagnostic = conv_test(lambda n: n ** -2.0, 0.0, 10000, start = 1)
    assert diagnostic.limit_2d == pytest.approx(math.pi ** 2 / 3.0, rel = 1e-3)
    n, ratio = diagnostic.conv_trajectory[-1]
    assert n == 10000
    assert ratio == pytest.approx(math.pi ** 2 / 3.0, rel = 1e-2)
    assert diagnostic.verdict == "consistent"


def test_direct_and_fft_convolution_agree():
    terms = np.arange(1, 6001, dtype = np.float64) ** -1.5
    terms = np.concatenate([[0.0], terms])
    small = conv_test(terms, 0.0, 4000, start = 1)
    large = conv_test(terms, 0.0, 6000, start = 1)
    small_ratios = dict(small.conv_trajectory)
    for n, ratio in large.conv_trajectory:
        if n in small_ratios:
            assert ratio == pytest.approx(small_ratios[n], rel = 1e-9)


def test_sequence_as_callable_and_array_agree():
    from_callable = ratio_test(lambda n: math.exp(-0.3 * n) / n, 0.3, 500)
    values = np.array([0.0] + [math.exp(-0.3 * n) / n for n in range(1, 501)])
    from_array = ratio_test(values, 0.3, 500)
    assert from_callable.ratio_trajectory == from_array.ratio_trajectory


def test_non_positive_term():
    with pytest.raises(NonPositive):
        ratio_test(lambda n: 0.0 if n == 7 else 1.0, 0.0, 100)


def test_overflowing_weights():
    with pytest.raises(SequenceOverflow):
        conv_test(np.zeros(2001), 1.0, 2000, start = 0, log_terms = True)


def test_short_array_is_rejected():
    with pytest.raises(ValueError):
        ratio_test(np.ones(10), 0.0, 100)


def test_tail_ratio_of_lattice_walk():
    alpha = solve_tilt(PM1_WALK).alpha
    source = sum_tail_source(lattice_walk_from_model(PM1_WALK))
    zero, two = cond_ratio_test(source, alpha, [0.0, 2.0], 1000, workers = 2)
    assert zero.verdict == "consistent"
    assert all(value == 1.0 for _, value in zero.trajectory)
    # Relative error O(y^2 / n)
    assert two.target == pytest.approx(math.exp(alpha * 2.0))
    n, value = two.trajectory[-1]
    assert n == 1000
    assert value == pytest.approx(two.target, rel = 2e-2)
    assert two.verdict == "consistent"
