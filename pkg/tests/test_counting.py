"""Photon counting: exact inverse-CDF sampling against a scipy oracle,
bit-reproducibility, and Poisson statistics."""

import numpy as np
import pytest
from scipy import stats

from oamem import counting
from oamem.counting import CountHistogram, DetectorParams


def cell_ids(n_channels, n_bins):
    # documented cell labeling: channel index in the high 32 bits
    ch = np.arange(n_channels, dtype=np.uint64)[:, None] << np.uint64(32)
    return (ch + np.arange(n_bins, dtype=np.uint64)[None, :]).ravel()


def test_sampler_matches_scipy_inverse_cdf():
    """Count = #{k : F(k) < u} is exactly poisson.ppf(u, mu)."""
    mu = np.array([
        [0.0, 1e-12, 1e-4, 0.05, 0.5, 2.0, 11.0, 37.0],
        [499.0, 120.0, 7.5, 3.0, 0.9, 0.01, 1e-7, 0.2],
    ])
    cells = cell_ids(*mu.shape)
    for trial in (0, 1, 17, 4095, 4096, 123456):
        u = counting.uniform_for_cells(2024, 5, np.array([trial], dtype=np.uint64),
                                       cells)[0]
        expect = stats.poisson.ppf(u, mu.ravel()).astype(np.uint64)
        got = counting.sample_trial(mu, seed=2024, stream=5, trial=trial)
        assert np.array_equal(got.ravel(), expect)


def test_trial_sum_equals_histogram_across_chunks():
    # 5000 trials crosses the internal 4096-trial chunk boundary
    rng = np.random.default_rng(7)
    mu = rng.uniform(0.0, 0.4, size=(2, 16))
    trials = 5000
    hist = counting.sample_histogram(mu, trials=trials, seed=99, stream=3)
    total = np.zeros((2, 16), dtype=np.uint64)
    for t in range(trials):
        total += counting.sample_trial(mu, seed=99, stream=3, trial=t)
    assert np.array_equal(hist.counts, total)
    assert hist.trials == trials


def test_workers_do_not_change_a_single_count():
    mu = np.full((2, 64), 0.05)
    a = counting.sample_histogram(mu, trials=20000, seed=11, stream=0, workers=1)
    b = counting.sample_histogram(mu, trials=20000, seed=11, stream=0, workers=4)
    assert np.array_equal(a.counts, b.counts)


def test_determinism_and_key_sensitivity():
    mu = np.full((2, 32), 0.1)
    a = counting.sample_histogram(mu, trials=3000, seed=42, stream=1)
    b = counting.sample_histogram(mu, trials=3000, seed=42, stream=1)
    assert a.counts.tobytes() == b.counts.tobytes()
    other_seed = counting.sample_histogram(mu, trials=3000, seed=43, stream=1)
    other_stream = counting.sample_histogram(mu, trials=3000, seed=42, stream=2)
    assert not np.array_equal(a.counts, other_seed.counts)
    assert not np.array_equal(a.counts, other_stream.counts)
    t0 = counting.sample_trial(mu, seed=42, stream=1, trial=0)
    t1 = counting.sample_trial(mu, seed=42, stream=1, trial=1)
    assert not np.array_equal(t0, t1)


def test_uniforms_cover_the_unit_interval():
    cells = np.arange(64, dtype=np.uint64)
    trials = np.arange(2000, dtype=np.uint64)
    u = counting.uniform_for_cells(1, 0, trials, cells)
    assert u.shape == (2000, 64)
    assert u.min() >= 0.0 and u.max() < 1.0
    n = u.size
    assert abs(u.mean() - 0.5) < 5.0 / np.sqrt(12.0 * n)


def test_histogram_means_within_poisson_error():
    mu = np.array([[0.002, 0.02, 0.08, 0.2], [0.5, 0.004, 0.05, 0.35]])
    trials = 200000
    hist = counting.sample_histogram(mu, trials=trials, seed=314, stream=0)
    rate = hist.counts.astype(float) / trials
    se = np.sqrt(mu / trials)
    assert np.all(np.abs(rate - mu) < 5.0 * se)


def test_trialwise_variance_is_poissonian():
    mu_val = 2.0
    mu = np.full(8, mu_val)
    n_trials = 4000
    draws = np.empty((n_trials, 8))
    for t in range(n_trials):
        draws[t] = counting.sample_trial(mu, seed=271, stream=9, trial=t)
    flat = draws.ravel()
    n = flat.size
    assert abs(flat.mean() - mu_val) < 5.0 * np.sqrt(mu_val / n)
    # Var(s^2) ~ (mu + 2 mu^2)/n for Poisson
    se_var = np.sqrt((mu_val + 2.0 * mu_val ** 2) / n)
    assert abs(flat.var(ddof=1) - mu_val) < 3.0 * se_var


def test_expected_counts_composition():
    det = DetectorParams(quantum_efficiency=0.5, dark_count_rate=100.0)
    out = counting.expected_counts(np.array([2.0, 0.0]), det, 1e-8,
                                   background_rate=10.0)
    # QE applies to light (signal and background), dark counts add directly
    expect = 0.5 * (np.array([2.0, 0.0]) + 10.0 * 1e-8) + 100.0 * 1e-8
    assert np.allclose(out, expect, rtol=1e-15)
    with pytest.raises(ValueError):
        counting.expected_counts(np.array([-1.0]), det, 1e-8)
    with pytest.raises(ValueError):
        counting.expected_counts(np.array([1.0]), det, 1e-8, background_rate=-1.0)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorParams(quantum_efficiency=0.0)
    with pytest.raises(ValueError):
        DetectorParams(quantum_efficiency=1.2)
    with pytest.raises(ValueError):
        DetectorParams(quantum_efficiency=0.5, dark_count_rate=-1.0)


def test_mean_guards():
    with pytest.raises(ValueError):
        counting.sample_trial(np.array([600.0]), 1, 0, 0)
    with pytest.raises(ValueError):
        counting.sample_trial(np.array([-0.1]), 1, 0, 0)
    with pytest.raises(ValueError):
        counting.sample_trial(np.array([np.nan]), 1, 0, 0)
    with pytest.raises(ValueError):
        counting.sample_trial(np.zeros((2, 2, 2)), 1, 0, 0)
    with pytest.raises(ValueError):
        counting.sample_histogram(np.zeros((3, 4)), trials=1, seed=0)
    with pytest.raises(ValueError):
        counting.sample_histogram(np.zeros((2, 4)), trials=-1, seed=0)


def test_zero_mean_yields_zero_counts():
    hist = counting.sample_histogram(np.zeros((2, 16)), trials=10000, seed=5)
    assert hist.counts.sum() == 0


def test_histogram_dataclass_contract():
    counts = np.zeros((2, 4), dtype=np.uint64)
    hist = CountHistogram(counts=counts, trials=10, bin_width=1e-8, t0=1e-6)
    assert hist.n_bins == 4
    assert np.allclose(hist.times(), 1e-6 + 1e-8 * (np.arange(4) + 0.5))
    assert hist.channel("minus") is counts[1] or np.array_equal(
        hist.channel("minus"), counts[1])
    with pytest.raises(ValueError):
        CountHistogram(counts=counts.astype(np.int64), trials=10, bin_width=1e-8)
    with pytest.raises(ValueError):
        CountHistogram(counts=np.zeros((3, 4), dtype=np.uint64), trials=10,
                       bin_width=1e-8)
    with pytest.raises(ValueError):
        CountHistogram(counts=counts, trials=10, bin_width=0.0)


def test_accumulate_merges_and_guards():
    mu = np.full((2, 8), 0.2)
    a = counting.sample_histogram(mu, trials=1000, seed=1, stream=0, bin_width=1e-8)
    b = counting.sample_histogram(mu, trials=500, seed=1, stream=7, bin_width=1e-8)
    merged = counting.accumulate(a, b)
    assert np.array_equal(merged.counts, a.counts + b.counts)
    assert merged.trials == 1500
    c = counting.sample_histogram(mu, trials=10, seed=1, bin_width=2e-8)
    with pytest.raises(ValueError):
        counting.accumulate(a, c)
    d = counting.sample_histogram(mu[:, :4], trials=10, seed=1, bin_width=1e-8)
    with pytest.raises(ValueError):
        counting.accumulate(a, d)
