"""Photon-statistics estimators on timestamp streams.

All estimators are folds over the event list: partial results computed on
pieces of a trace merge exactly into the result for the whole trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import NumberStateDistribution

# Fraction of a period within which a phase is snapped back onto the cycle
# boundary; absorbs rounding in i*T / T.
PHASE_SNAP = 1e-6


def _times_and_duration(trace, duration):
    if hasattr(trace, "times"):
        times = np.asarray(trace.times, dtype=float)
        if duration is None:
            duration = trace.duration
    else:
        times = np.asarray(trace, dtype=float)
    if duration is None:
        raise ValueError("duration is required for a bare timestamp array")
    return times, float(duration)


@dataclass(frozen=True, eq=False)
class CountHistogram:
    window_length: float
    counts: np.ndarray

    def __post_init__(self):
        if not self.window_length > 0:
            raise ValueError("window_length must be > 0")

    @property
    def n_windows(self) -> int:
        return len(self.counts)

    def concat(self, other: CountHistogram) -> CountHistogram:
        if other.window_length != self.window_length:
            raise ValueError("cannot merge histograms with different window lengths")
        return CountHistogram(self.window_length, np.concatenate([self.counts, other.counts]))


def count_in_windows(trace, window: float, duration: float | None = None) -> CountHistogram:
    """Number of events in each of the ``floor(duration / window)`` windows tiling ``[0, duration)``.

    Events in the trailing partial window are discarded.
    """
    times, duration = _times_and_duration(trace, duration)
    if not window > 0:
        raise ValueError(f"window must be > 0, got {window}")
    if window > duration:
        raise ValueError(f"window {window} longer than trace duration {duration}")
    n = int(math.floor(duration / window))
    idx = np.floor(times / window).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < n)]
    return CountHistogram(float(window), np.bincount(idx, minlength=n))


def _moments(counts):
    c = np.asarray(counts, dtype=float)
    if c.size < 2:
        raise ValueError("need at least two windows")
    mean = c.mean()
    if mean <= 0:
        raise ValueError("mean count is zero; Mandel Q is undefined")
    return c, mean


def mandel_q(hist: CountHistogram) -> float:
    """Mandel Q from the unbiased sample variance of the window counts."""
    c, mean = _moments(hist.counts)
    return float(c.var(ddof=1) / mean - 1.0)


def fano_factor(hist: CountHistogram) -> float:
    return mandel_q(hist) + 1.0


def mandel_q_stderr(hist: CountHistogram) -> float:
    """Delta-method standard error of :func:`mandel_q`, from the sample's own central moments."""
    c, mean = _moments(hist.counts)
    n = c.size
    d = c - mean
    m2 = np.mean(d ** 2)
    m3 = np.mean(d ** 3)
    m4 = np.mean(d ** 4)
    var_s2 = max(m4 - m2 ** 2, 0.0) / n
    var_mean = m2 / n
    cov = m3 / n
    var_q = var_s2 / mean ** 2 + m2 ** 2 * var_mean / mean ** 4 - 2 * m2 * cov / mean ** 3
    return float(math.sqrt(max(var_q, 0.0)))


@dataclass(frozen=True, eq=False)
class CorrelationHistogram:
    """Coincidence counts of ordered pairs (i < j) binned by delay ``t_j - t_i`` on ``[0, max_delay)``."""

    bin_width: float
    max_delay: float
    bins: np.ndarray
    total_events: int

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    @property
    def delays(self) -> np.ndarray:
        """Left edge of each delay bin."""
        return np.arange(self.n_bins) * self.bin_width

    def merge(self, other: CorrelationHistogram) -> CorrelationHistogram:
        if (other.bin_width, other.max_delay) != (self.bin_width, self.max_delay):
            raise ValueError("cannot merge correlation histograms with different binning")
        return CorrelationHistogram(self.bin_width, self.max_delay, self.bins + other.bins,
                                    self.total_events + other.total_events)


def g2_histogram(times, bin_width: float, max_delay: float, start: int = 0,
                 stop: int | None = None) -> CorrelationHistogram:
    """All-pairs (multi-stop) delay histogram of a sorted timestamp array.

    Only pairs whose earlier event has index in ``[start, stop)`` are counted,
    so histograms over a partition of the index range sum to the full one.
    """
    if not (bin_width > 0 and max_delay > 0):
        raise ValueError("bin_width and max_delay must be > 0")
    t = np.asarray(times, dtype=float)
    n = t.size
    stop = n if stop is None else min(stop, n)
    n_bins = int(math.ceil(max_delay / bin_width))
    bins = np.zeros(n_bins, dtype=np.int64)
    lag = 1
    while True:
        hi = min(stop, n - lag)
        if hi <= start:
            break
        d = t[start + lag:hi + lag] - t[start:hi]
        close = d < max_delay
        if not close.any():
            break
        b = np.minimum((d[close] / bin_width).astype(np.int64), n_bins - 1)
        bins += np.bincount(b, minlength=n_bins)
        lag += 1
    return CorrelationHistogram(float(bin_width), float(max_delay), bins, max(stop - start, 0))


@dataclass(frozen=True)
class PeakAreas:
    zero_peak_area: float
    mean_side_peak_area: float
    ratio: float
    side_peak_areas: tuple
    convention: str = ("zero peak = 2 x pairs with delay in [0, T/2) (both delay signs); "
                       "side peak k = pairs with delay in [kT - T/2, kT + T/2), k >= 1, complete peaks only")


def pulse_peak_areas(g2: CorrelationHistogram, period: float) -> PeakAreas:
    """Zero-delay and side-peak coincidence areas of a pulsed correlation histogram.

    The histogram holds only non-negative delays, so the zero-delay peak is
    mirrored to cover both signs; side peaks at ``kT`` are counted once each,
    matching one side of the symmetric correlation function. Each bin is
    assigned to the peak containing its centre.
    """
    if not period > 2 * g2.bin_width:
        raise ValueError("period must exceed two bin widths")
    if g2.max_delay < 3 * period * (1 - 1e-12):
        raise ValueError("max_delay must cover at least three periods")
    centers = (np.arange(g2.n_bins) + 0.5) * g2.bin_width
    peak = np.floor(centers / period + 0.5).astype(np.int64)
    n_side = int(math.floor(g2.max_delay / period - 0.5 + 1e-9))
    if n_side < 1:
        raise ValueError("no complete side peak within max_delay")
    zero = 2.0 * float(g2.bins[peak == 0].sum())
    sides = tuple(float(g2.bins[peak == k].sum()) for k in range(1, n_side + 1))
    side_mean = float(np.mean(sides))
    if side_mean == 0:
        raise ValueError("side peaks are empty; ratio undefined")
    return PeakAreas(zero, side_mean, zero / side_mean, sides)


@dataclass(frozen=True, eq=False)
class PhaseHistogram:
    period: float
    counts: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def bin_starts(self) -> np.ndarray:
        return np.arange(self.n_bins) * (self.period / self.n_bins)

    @property
    def visibility(self) -> float:
        hi, lo = float(self.counts.max()), float(self.counts.min())
        return (hi - lo) / (hi + lo)

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    def merge(self, other: PhaseHistogram) -> PhaseHistogram:
        if (other.period, other.n_bins) != (self.period, self.n_bins):
            raise ValueError("cannot merge phase histograms with different binning")
        return PhaseHistogram(self.period, self.counts + other.counts)


def phase_correlation(times, period: float, n_bins: int) -> PhaseHistogram:
    """Histogram of event phase ``t mod period`` over ``n_bins`` equal bins."""
    if not period > 0:
        raise ValueError("period must be > 0")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("no events")
    x = t / period
    frac = x - np.floor(x)
    frac[frac > 1.0 - PHASE_SNAP] = 0.0
    idx = np.minimum((frac * n_bins).astype(np.int64), n_bins - 1)
    return PhaseHistogram(float(period), np.bincount(idx, minlength=n_bins))


def empirical_pmf(samples, max_photons: int) -> np.ndarray:
    """Normalized histogram of integer samples on ``0..max_photons``."""
    s = np.asarray(samples, dtype=np.int64)
    counts = np.bincount(s, minlength=max_photons + 1)
    if len(counts) != max_photons + 1:
        raise ValueError(f"samples exceed max_photons={max_photons}")
    return counts / s.size


def distribution_distance(empirical, analytic) -> float:
    """Total-variation distance between two distributions on the same photon-number support.

    Integer input is read as raw counts and normalized; float input is taken
    as probabilities as given.
    """
    def as_array(x):
        return np.asarray(x.probabilities if isinstance(x, NumberStateDistribution) else x)

    p, q = as_array(empirical), as_array(analytic)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    if np.issubdtype(p.dtype, np.integer):
        if p.sum() <= 0:
            raise ValueError("empirical distribution is empty")
        p = p / p.sum()
    return float(0.5 * np.abs(p.astype(float) - q.astype(float)).sum())
