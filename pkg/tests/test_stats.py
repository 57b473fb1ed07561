import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from sawphoton.mc import run_experiment
from sawphoton.physics import emitted_count_pmf
from sawphoton.rng import RngSpec
from sawphoton.stats import (CorrelationHistogram, CountHistogram, count_in_windows, distribution_distance,
                             empirical_pmf, fano_factor, g2_histogram, mandel_q, mandel_q_stderr,
                             phase_correlation, pulse_peak_areas)

from conftest import experiment_at, wrapped_exponential_masses


def brute_pairs(times, bin_width, max_delay):
    n_bins = math.ceil(max_delay / bin_width)
    bins = np.zeros(n_bins, dtype=int)
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            d = times[j] - times[i]
            if d < max_delay:
                bins[min(int(d / bin_width), n_bins - 1)] += 1
    return bins


class TestCountInWindows:
    def test_simple(self):
        h = count_in_windows(np.array([0.5, 1.5, 2.5]), 1.0, 3.0)
        assert list(h.counts) == [1, 1, 1] and h.n_windows == 3

    def test_empty(self):
        h = count_in_windows(np.array([]), 1.0, 5.0)
        assert list(h.counts) == [0] * 5

    def test_trailing_partial_dropped(self):
        h = count_in_windows(np.array([0.1, 1.1, 2.05, 2.2]), 1.0, 2.5)
        assert list(h.counts) == [1, 1]

    def test_window_too_long(self):
        with pytest.raises(ValueError):
            count_in_windows(np.array([0.1]), 2.0, 1.0)
        with pytest.raises(ValueError):
            count_in_windows(np.array([0.1]), 0.0, 1.0)

    def test_poisson_mean(self):
        rng = np.random.default_rng(1)
        r, window, n_win = 3.0, 2.0, 10_000
        duration = window * n_win
        times = np.sort(rng.uniform(0, duration, rng.poisson(r * duration)))
        h = count_in_windows(times, window, duration)
        assert abs(h.counts.mean() - r * window) < 3 * math.sqrt(r * window / n_win)


class TestMandel:
    def test_constant_counts(self):
        h = CountHistogram(1.0, np.full(50, 4))
        assert mandel_q(h) == -1.0
        assert fano_factor(h) == 0.0

    def test_poisson(self):
        rng = np.random.default_rng(2)
        h = CountHistogram(1.0, rng.poisson(5.0, 100_000))
        assert abs(mandel_q(h)) < 0.02
        assert abs(fano_factor(h) - 1) < 0.02

    def test_binomial(self):
        K, p, n = 100, 0.7, 10_000
        rng = np.random.default_rng(3)
        h = CountHistogram(1.0, rng.binomial(K, p, n))
        # delta-method sd of Q for binomial counts, from its exact moments
        mu, var = K * p, K * p * (1 - p)
        mu4 = var * (1 + 3 * (K - 2) * p * (1 - p))
        sigma = math.sqrt((mu4 - var ** 2) / n) / mu
        assert abs(mandel_q(h) + p) < 3 * sigma
        assert mandel_q_stderr(h) == pytest.approx(sigma, rel=0.1)

    def test_unbiased_variance(self):
        h = CountHistogram(1.0, np.array([1, 3]))
        assert mandel_q(h) == pytest.approx(2 / 2 - 1)

    @given(st.lists(st.integers(0, 50), min_size=2, max_size=200).filter(lambda c: sum(c) > 0))
    def test_fano_identity(self, counts):
        h = CountHistogram(1.0, np.array(counts))
        assert fano_factor(h) == mandel_q(h) + 1
        assert fano_factor(h) - mandel_q(h) == pytest.approx(1.0, abs=1e-12)

    def test_all_zero_undefined(self):
        with pytest.raises(ValueError):
            mandel_q(CountHistogram(1.0, np.zeros(10, dtype=int)))


class TestG2Histogram:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 50, allow_nan=False), min_size=0, max_size=120),
           st.floats(0.05, 3), st.floats(0.5, 20))
    def test_matches_brute_force(self, raw, bw, md):
        t = np.sort(np.array(raw))
        g = g2_histogram(t, bw, md)
        assert np.array_equal(g.bins, brute_pairs(t, bw, md))
        assert g.n_bins == math.ceil(md / bw)

    def test_brute_force_large(self):
        rng = np.random.default_rng(4)
        t = np.sort(rng.uniform(0, 100, 1000))
        g = g2_histogram(t, 0.1, 2.0)
        assert np.array_equal(g.bins, brute_pairs(t, 0.1, 2.0))

    def test_perfect_antibunching(self):
        T = 1.0
        g = g2_histogram(np.arange(1000) * T, T / 10, 3.5 * T)
        assert g.bins[g.delays < T / 2].sum() == 0

    def test_coincident_pairs(self):
        t = np.repeat(np.arange(100.0), 2)
        g = g2_histogram(t, 0.1, 3.5)
        assert g.bins[0] == 100

    def test_poisson_flat(self):
        rng = np.random.default_rng(5)
        r, D, bw = 50.0, 2000.0, 0.05
        t = np.sort(rng.uniform(0, D, rng.poisson(r * D)))
        g = g2_histogram(t, bw, 1.0)
        r_hat = len(t) / D  # realized rate; the event count itself fluctuates
        expected = r_hat * r_hat * D * bw
        assert abs(g.bins.mean() - expected) < 3 * math.sqrt(expected / g.n_bins)
        chi2 = ((g.bins - g.bins.mean()) ** 2 / g.bins.mean()).sum()
        assert sps.chi2.sf(chi2, g.n_bins - 1) > 0.001

    @given(st.lists(st.floats(0, 30, allow_nan=False), min_size=2, max_size=80), st.data())
    def test_partial_histograms_merge(self, raw, data):
        t = np.sort(np.array(raw))
        cut = data.draw(st.integers(0, len(t)))
        full = g2_histogram(t, 0.3, 4.0)
        merged = g2_histogram(t, 0.3, 4.0, stop=cut).merge(g2_histogram(t, 0.3, 4.0, start=cut))
        assert np.array_equal(full.bins, merged.bins)
        assert merged.total_events == full.total_events


class TestPulsePeakAreas:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_deterministic_n_photon(self, n):
        pulses = 2000
        t = np.repeat(np.arange(float(pulses)), n)
        peaks = pulse_peak_areas(g2_histogram(t, 0.05, 3.5), 1.0)
        # side peak k only has pulses - k pulse pairs in a finite stream
        assert peaks.zero_peak_area == n * (n - 1) * pulses
        assert peaks.side_peak_areas == tuple(float(n * n * (pulses - k)) for k in (1, 2, 3))
        assert peaks.ratio == pytest.approx((n - 1) / n * pulses / (pulses - 2), rel=1e-15)
        assert len(peaks.side_peak_areas) == 3

    def test_ideal_single_photon(self):
        res = run_experiment(experiment_at(20.0, n_cycles=20_000), RngSpec(1))
        peaks = pulse_peak_areas(g2_histogram(res.detections.times, 1e-9 / 40, 3.5e-9), 1e-9)
        # one cross-pulse pair in the zero peak needs a delay gap > T/2: rate e^-10 / 2 per pulse pair
        floor = 2 * 20_000 * 0.5 * math.exp(-10) / peaks.mean_side_peak_area
        assert peaks.ratio <= 5 * floor

    def test_ideal_two_photon(self):
        res = run_experiment(experiment_at(20.0, n=2, n_cycles=20_000), RngSpec(2))
        peaks = pulse_peak_areas(g2_histogram(res.detections.times, 1e-9 / 40, 3.5e-9), 1e-9)
        assert peaks.ratio == pytest.approx(0.5, abs=0.05)

    def test_requires_side_peaks(self):
        g = CorrelationHistogram(0.1, 2.0, np.ones(20, dtype=int), 10)
        with pytest.raises(ValueError):
            pulse_peak_areas(g, 1.0)
        with pytest.raises(ValueError):
            pulse_peak_areas(CorrelationHistogram(0.6, 4.0, np.ones(7, dtype=int), 10), 1.0)


class TestPhase:
    def test_phase_zero(self):
        T = 1 / 3e9
        ph = phase_correlation(np.arange(10_000) * T, T, 20)
        assert ph.counts[0] == 10_000
        assert ph.visibility == 1.0

    def test_uniform(self):
        rng = np.random.default_rng(6)
        ph = phase_correlation(rng.uniform(0, 1000, 1_000_000), 1.0, 10)
        mean = 1e5
        assert ph.visibility < 4 / math.sqrt(mean)

    def test_wrapped_exponential(self):
        gt, f = 3.0, 1e9
        res = run_experiment(experiment_at(gt, n_cycles=200_000, f=f), RngSpec(7))
        ph = phase_correlation(res.emissions.times, 1 / f, 10)
        oracle = wrapped_exponential_masses(gt, 10)
        assert oracle.sum() == pytest.approx(1.0, abs=1e-10)
        assert distribution_distance(ph.counts, oracle) < 0.01

    def test_merge(self):
        rng = np.random.default_rng(8)
        t = np.sort(rng.uniform(0, 50, 5000))
        whole = phase_correlation(t, 1.3, 16)
        parts = phase_correlation(t[:1234], 1.3, 16).merge(phase_correlation(t[1234:], 1.3, 16))
        assert np.array_equal(whole.counts, parts.counts)

    def test_errors(self):
        with pytest.raises(ValueError):
            phase_correlation(np.array([]), 1.0, 10)
        with pytest.raises(ValueError):
            phase_correlation(np.array([0.1]), 1.0, 1)
        with pytest.raises(ValueError):
            phase_correlation(np.array([0.1]), 0.0, 10)


class TestDistance:
    def test_identical(self):
        p = emitted_count_pmf(4, 1.0, 0.8)
        assert distribution_distance(p, p) == 0.0

    def test_disjoint(self):
        assert distribution_distance([1, 0, 0], [0, 0, 1]) == 1.0

    def test_sampled_binomial(self):
        rng = np.random.default_rng(9)
        p = emitted_count_pmf(3, 1.0, 1.0)
        samples = rng.binomial(3, 1 - math.exp(-1), 1_000_000)
        assert distribution_distance(empirical_pmf(samples, 3), p) < 0.005

    def test_mismatch(self):
        with pytest.raises(ValueError):
            distribution_distance([0.5, 0.5], [1 / 3, 1 / 3, 1 / 3])
        with pytest.raises(ValueError):
            empirical_pmf([0, 1, 5], 3)

    def test_count_histograms_concat(self):
        rng = np.random.default_rng(10)
        t = np.sort(rng.uniform(0, 100, 3000))
        whole = count_in_windows(t, 2.0, 100.0)
        a = count_in_windows(t[t < 40], 2.0, 40.0)
        b = count_in_windows(t[t >= 40] - 40, 2.0, 60.0)
        assert np.array_equal(a.concat(b).counts, whole.counts)
        assert mandel_q(a.concat(b)) == mandel_q(whole)
