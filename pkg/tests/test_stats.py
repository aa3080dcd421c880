import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushblock.core import Seed
from pushblock.lpp import geometric_pmf
from pushblock.stats import (EmpiricalDist, chi2_test, chi2_two_sample,
                             dist_moments, export_histogram_csv,
                             import_histogram_csv, ks_statistic, merge,
                             moment_ci, tv_distance, tv_within_noise)

dist_strategy = st.lists(st.integers(min_value=0, max_value=12),
                         min_size=1, max_size=60).map(EmpiricalDist.from_samples)


def test_merge_identity():
    a = EmpiricalDist.from_samples([1, 2, 2, 5])
    out = merge(a, EmpiricalDist())
    assert out.counts == a.counts and out.total == a.total


@given(dist_strategy, dist_strategy)
@settings(max_examples=60, deadline=None)
def test_merge_commutative_and_total(a, b):
    ab, ba = merge(a, b), merge(b, a)
    assert ab.counts == ba.counts
    assert ab.total == a.total + b.total


@given(dist_strategy, dist_strategy, dist_strategy)
@settings(max_examples=40, deadline=None)
def test_merge_associative(a, b, c):
    assert merge(merge(a, b), c).counts == merge(a, merge(b, c)).counts


def test_tv_identical_and_disjoint():
    a = EmpiricalDist.from_samples([0, 1, 1, 3])
    assert tv_distance(a, a) == 0.0
    assert ks_statistic(a, a) == 0.0
    b = EmpiricalDist.from_samples([7, 8])
    assert tv_distance(a, b) == pytest.approx(1.0)


def test_tv_rejects_empty():
    with pytest.raises(ValueError):
        tv_distance(EmpiricalDist(), EmpiricalDist.from_samples([1]))


@given(dist_strategy, dist_strategy, dist_strategy)
@settings(max_examples=40, deadline=None)
def test_tv_symmetric_triangle(a, b, c):
    assert tv_distance(a, b) == pytest.approx(tv_distance(b, a))
    assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12


def test_chi2_pools_small_bins():
    rng = np.random.default_rng(2)
    samples = rng.geometric(0.75, size=5000) - 1
    dist = EmpiricalDist.from_samples(samples)
    stat, p = chi2_test(dist, lambda k: geometric_pmf(0.5, k))
    assert p > 1e-4  # correct null
    stat2, p2 = chi2_test(dist, lambda k: geometric_pmf(0.7, k))
    assert p2 < 1e-6  # wrong null rejected


def test_chi2_calibration_rejection_rate():
    # Under the correct null the level-0.01 rejection rate is 0.01.
    rng = np.random.default_rng(5)
    rejections = 0
    trials = 2000
    for _ in range(trials):
        samples = rng.geometric(0.75, size=2000) - 1
        dist = EmpiricalDist.from_samples(samples)
        _, p = chi2_test(dist, lambda k: geometric_pmf(0.5, k))
        rejections += p < 0.01
    assert abs(rejections / trials - 0.01) < 0.005


def test_chi2_two_sample_null_and_alternative():
    rng = np.random.default_rng(9)
    a = EmpiricalDist.from_samples(rng.geometric(0.75, size=20000) - 1)
    b = EmpiricalDist.from_samples(rng.geometric(0.75, size=20000) - 1)
    _, p_null = chi2_two_sample(a, b)
    assert p_null > 1e-3
    c = EmpiricalDist.from_samples(rng.geometric(0.6, size=20000) - 1)
    _, p_alt = chi2_two_sample(a, c)
    assert p_alt < 1e-8


def test_tv_within_noise_accepts_same_law():
    rng = np.random.default_rng(12)
    a = EmpiricalDist.from_samples(rng.poisson(2.0, size=30000))
    b = EmpiricalDist.from_samples(rng.poisson(2.0, size=30000))
    ok, obs, thr = tv_within_noise(a, b, Seed(3))
    assert ok, (obs, thr)
    c = EmpiricalDist.from_samples(rng.poisson(2.6, size=30000))
    ok2, _, _ = tv_within_noise(a, c, Seed(3))
    assert not ok2


def test_moment_ci_basics():
    with pytest.raises(ValueError):
        moment_ci([1.0])
    m = moment_ci([3.0, 3.0, 3.0, 3.0])
    assert m.variance == 0.0
    assert m.se_variance == 0.0


def test_moment_ci_geometric_mean():
    rng = np.random.default_rng(21)
    xs = rng.geometric(0.75, size=200_000) - 1
    m = moment_ci(xs)
    assert abs(m.mean - 1.0 / 3.0) < 3 * m.se_mean + 1e-9


def test_merged_moments_equal_concatenated():
    rng = np.random.default_rng(31)
    xs = rng.integers(0, 10, size=500)
    ys = rng.integers(0, 10, size=700)
    merged = merge(EmpiricalDist.from_samples(xs), EmpiricalDist.from_samples(ys))
    direct = moment_ci(np.concatenate([xs, ys]).astype(float))
    via_merge = dist_moments(merged)
    assert via_merge.mean == pytest.approx(direct.mean, abs=1e-10)
    assert via_merge.variance == pytest.approx(direct.variance, abs=1e-10)


def test_histogram_csv_roundtrip():
    d = EmpiricalDist.from_samples([0, 0, 1, 5, 5, 5])
    text = export_histogram_csv(d, header_meta="seed=1")
    assert import_histogram_csv(text).counts == d.counts
