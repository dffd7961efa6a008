import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from uniform_extremes.gaussian import (
    log_phi_bar,
    mills_mean,
    phi_bar,
    phi_bar_value,
    sample_truncated_std_normal,
)

# 50-digit mpmath references of erfc(x / sqrt 2) / 2
REFERENCE = {
    3.0: (1.3498980316300945e-03, -6.6077262215103495),
    10.0: (7.6198530241605261e-24, -53.231285150512471),
    20.0: (2.7536241186062337e-89, -203.91715537109726),
    30.0: (4.9067139271481871e-198, -454.3212439563432),
    40.0: (3.6558935409150297e-350, -804.60844201375379),
}


def test_phi_bar_at_zero():
    assert phi_bar(0.0).value == 0.5


@pytest.mark.parametrize("x", [3.0, 10.0])
def test_phi_bar_matches_reference(x):
    value, log_value = REFERENCE[x]
    tv = phi_bar(x)
    assert tv.value == pytest.approx(value, rel=1e-12)
    assert tv.log_value == pytest.approx(log_value, rel=1e-10)


@pytest.mark.parametrize("x", [20.0, 30.0, 40.0])
def test_log_phi_bar_far_tail(x):
    assert phi_bar(x).log_value == pytest.approx(REFERENCE[x][1], rel=1e-10)


def test_x10_log_value_and_table_value():
    tv = phi_bar(10.0)
    assert round(tv.log_value, 3) == -53.231
    # 1 - Phi(10)^100 is about 100 * phi_bar(10)
    assert 100 * tv.value == pytest.approx(7.62e-22, rel=1e-3)


def test_phi_bar_rejects_non_finite():
    with pytest.raises(ValueError):
        phi_bar(float("inf"))


@given(st.floats(-8, 8))
def test_symmetry(x):
    assert phi_bar_value(x) + phi_bar_value(-x) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-37, 37), st.floats(1e-6, 5))
def test_strictly_decreasing(x, d):
    assert phi_bar(x + d).log_value < phi_bar(x).log_value


@given(st.floats(-30, 30))
def test_value_and_log_agree(x):
    tv = phi_bar(x)
    assert tv.value == pytest.approx(math.exp(tv.log_value), rel=1e-13)


@pytest.mark.parametrize("x", [10.0, 20.0, 30.0])
def test_mills_asymptotic(x):
    gap = phi_bar(x).log_value + 0.5 * x * x + math.log(x) + 0.5 * math.log(2 * math.pi)
    assert abs(gap) <= 0.02


def test_vectorised_matches_scalar():
    xs = np.linspace(-10, 35, 91)
    np.testing.assert_array_equal(log_phi_bar(xs), [log_phi_bar(x) for x in xs])


def _draws(c, n, seed=0):
    rng = np.random.default_rng(seed)
    return np.array([sample_truncated_std_normal(c, rng) for _ in range(n)])


def test_vacuous_truncation_is_standard_normal():
    x = _draws(-40.0, 100_000)
    assert stats.kstest(x, "norm").statistic <= 0.01


def test_mills_mean_at_3():
    x = _draws(3.0, 1_000_000, seed=1)
    assert mills_mean(3.0) == pytest.approx(3.28309865493, rel=1e-10)
    assert abs(x.mean() - 3.2831) <= 0.01
    assert x.min() > 3.0


def test_far_tail_at_20():
    x = _draws(20.0, 100_000, seed=2)
    assert np.all(x > 20.0)
    assert abs(x.mean() - 20.0497530685) <= 0.001


@pytest.mark.parametrize("c", [0.0, 3.0, 8.0])
def test_conditional_exceedance_rate(c):
    delta, n = 0.2, 100_000
    x = _draws(c, n, seed=int(10 * c) + 3)
    p = math.exp(phi_bar(c + delta).log_value - phi_bar(c).log_value)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(np.mean(x > c + delta) - p) <= 3 * se


@settings(max_examples=60)
@given(st.floats(-10, 40), st.integers(0, 2**32 - 1))
def test_draw_exceeds_threshold(c, seed):
    assert sample_truncated_std_normal(c, np.random.default_rng(seed)) > c


def test_bounded_rejection_far_out():
    rng = np.random.default_rng(5)
    x = [sample_truncated_std_normal(40.0, rng) for _ in range(1000)]
    assert min(x) > 40.0
