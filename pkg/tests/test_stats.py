import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rarefy.stats import (
    DiscreteDistribution,
    chi_square_gof,
    chi_square_two_sample,
    default_k_max,
    empirical_distribution,
    poisson_pmf,
    tv_distance,
    tv_standard_error,
    wilson_interval,
)


def test_poisson_zero_is_point_mass():
    d = poisson_pmf(0.0, 5)
    assert d.probs[0] == 1.0 and d.tail == 0.0 and np.all(d.probs[1:] == 0)


def test_poisson_p0():
    assert poisson_pmf(2.17295).probs[0] == pytest.approx(0.11385, abs=1e-5)
    assert poisson_pmf(2.17295).probs[0] == pytest.approx(math.exp(-2.17295), rel=1e-14)


@pytest.mark.parametrize("a", [0.1, 2.17295, 7.5, 50.0])
def test_poisson_mean_with_tail_correction(a):
    d = poisson_pmf(a)
    assert d.k_max == math.ceil(a + 10 * math.sqrt(a))
    # E[X; X > k_max] = a P(X >= k_max)
    tail_mean = a * stats.poisson.sf(d.k_max - 1, a)
    assert d.mean() + tail_mean == pytest.approx(a, abs=1e-9)
    assert d.probs.sum() + d.tail == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a", [1e-3, 0.5, 3.0, 17.0, 50.0])
def test_poisson_recurrence_against_log_gamma(a):
    d = poisson_pmf(a, 200)
    k = np.arange(201)
    direct = np.exp(-a + k * math.log(a) - np.array([math.lgamma(j + 1) for j in k]))
    assert np.max(np.abs(d.probs - direct)) <= 1e-12


def test_poisson_negative_rejected():
    with pytest.raises(ValueError):
        poisson_pmf(-1.0)


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.array([1.5, -0.5]))


def test_empirical_distribution_lumps_tail():
    d = empirical_distribution([0, 1, 1, 5, 9], 3)
    assert d.probs.tolist() == [0.2, 0.4, 0.0, 0.0]
    assert d.tail == pytest.approx(0.4)
    with pytest.raises(ValueError):
        empirical_distribution([], 3)


def test_tv_examples():
    p = poisson_pmf(2.0, 10)
    assert tv_distance(p, p) == 0.0
    a = DiscreteDistribution(np.array([1.0, 0.0]))
    b = DiscreteDistribution(np.array([0.0, 1.0]))
    assert tv_distance(a, b) == 1.0
    with pytest.raises(ValueError):
        tv_distance(poisson_pmf(2, 10), poisson_pmf(2, 11))


def test_tv_poisson_pair_against_direct_sum():
    p, q = poisson_pmf(2.0, 100), poisson_pmf(2.1, 100)
    k = np.arange(400)
    direct = 0.5 * np.abs(stats.poisson.pmf(k, 2.0) - stats.poisson.pmf(k, 2.1)).sum()
    value = tv_distance(p, q)
    assert value == pytest.approx(direct, abs=1e-12)
    assert tv_distance(poisson_pmf(2.0, 100), poisson_pmf(2.1, 100)) == value


def _dist(weights, tail):
    w = np.asarray(weights, dtype=float) + 1e-3
    total = w.sum() + tail
    return DiscreteDistribution(w / total, tail / total)


dists = st.builds(
    _dist,
    st.lists(st.floats(0, 1), min_size=6, max_size=6),
    st.floats(0, 0.5),
)


@settings(max_examples=200, deadline=None)
@given(dists, dists, dists)
def test_tv_symmetry_and_triangle(p, q, r):
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p), abs=1e-15)
    assert 0 <= tv_distance(p, q) <= 1
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


def test_chi_square_exact_proportions():
    ref = poisson_pmf(2.0, 12)
    counts = 10**9 * np.append(ref.probs, ref.tail)
    res = chi_square_gof(counts, ref)
    assert res.statistic == pytest.approx(0.0, abs=1e-9)
    assert res.p_value == pytest.approx(1.0)


def test_chi_square_too_few_trials():
    with pytest.raises(ValueError):
        chi_square_gof([3, 2], poisson_pmf(2.0, 12))


def _poisson_p_values(reps, n, rng, shift=0):
    ref = poisson_pmf(2.0, default_k_max(2.0))
    out = []
    for _ in range(reps):
        x = rng.poisson(2.0, n) + shift
        out.append(chi_square_gof(np.bincount(x), ref).p_value)
    return np.array(out)


def test_chi_square_calibration():
    p = _poisson_p_values(200, 10_000, np.random.default_rng(11))
    # ~1% rejections expected; 6 of 200 is far in the binomial tail
    assert np.count_nonzero(p < 0.01) <= 6


def test_chi_square_p_values_uniform_under_null():
    p = _poisson_p_values(500, 2000, np.random.default_rng(12))
    assert stats.kstest(p, "uniform").pvalue > 0.01


def test_chi_square_power():
    p = _poisson_p_values(5, 10_000, np.random.default_rng(13), shift=1)
    assert np.all(p < 1e-6)


def test_two_sample_same_and_different():
    rng = np.random.default_rng(14)
    same = chi_square_two_sample(rng.poisson(2, 3000), rng.poisson(2, 3000))
    diff = chi_square_two_sample(rng.poisson(2, 3000), rng.poisson(2.5, 3000))
    assert same.p_value > 1e-3
    assert diff.p_value < 1e-6
    assert same.dof >= 1


def test_wilson_examples():
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    low, high = wilson_interval(50, 100, 0.95)
    assert 0.5 - low == pytest.approx(high - 0.5, abs=1e-14)
    normal = 2 * 1.959963984540054 * math.sqrt(0.25 / 100)
    assert (high - low) == pytest.approx(normal, rel=0.1)


def test_wilson_errors():
    with pytest.raises(ValueError):
        wilson_interval(0, 0)
    with pytest.raises(ValueError):
        wilson_interval(5, 4)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10**6), st.floats(0, 1), st.sampled_from([0.8, 0.95, 0.99]))
def test_wilson_contains_point_estimate(n, frac, level):
    k = int(frac * n)
    low, high = wilson_interval(k, n, level)
    assert 0 <= low <= k / n <= high <= 1


def test_tv_standard_error_scales_like_root_n():
    rng = np.random.default_rng(15)
    ref = poisson_pmf(2.0, default_k_max(2.0))
    small = tv_standard_error(rng.poisson(2.0, 500), ref, np.random.default_rng(0))
    large = tv_standard_error(rng.poisson(2.0, 50_000), ref, np.random.default_rng(0))
    assert 0 < large < small
