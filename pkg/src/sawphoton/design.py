"""Accuracy budget and design-space search.

Photons are attributed to the injection window ``[jT, (j+1)T)`` in which they
are emitted. An electron injected ``k`` windows earlier lands in window ``j``
with probability ``beta (1 - x) x^k``, where ``x = exp(-gamma T)``. Cycles
are independent, so the photon count of a steady-state window is the
convolution over ``k`` of the per-cycle contributions, each a mixture over
the pump outcome {N-1, N, N+1}.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import binom

from .mc import DetectorModel, Experiment, PumpModel, run_experiment
from .physics import InjectionSpec, RecombinationModel, max_injection_frequency
from .rng import RngSpec
from .stats import count_in_windows, g2_histogram, mandel_q, pulse_peak_areas

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class AccuracyTarget:
    epsilon: float = DEFAULT_EPSILON
    classes: tuple = ("missing_photon", "multi_photon")

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class BudgetReport:
    """Per-window bad-event probabilities.

    ``p_zero_photon`` is the probability of fewer than N photons in a window
    and ``p_multi_photon`` of more than N; for single-photon operation these
    are the empty and multi-photon windows. ``p_late_emission`` is the chance
    that a packet has not fully recombined by the end of its own window.
    """

    p_zero_photon: float
    p_multi_photon: float
    p_late_emission: float
    contributions: dict
    passed: dict
    epsilon: float
    history_cycles: int

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "p_zero_photon": self.p_zero_photon,
            "p_multi_photon": self.p_multi_photon,
            "p_late_emission": self.p_late_emission,
            "pass": dict(self.passed),
            "contributions": {k: dict(v) for k, v in self.contributions.items()},
            "history_cycles": self.history_cycles,
        }


def min_divider(f_saw: float, gamma: float, epsilon: float) -> int:
    """Smallest divider M such that ``f_saw / M`` does not exceed the maximum injection frequency."""
    if not f_saw > 0:
        raise ValueError("f_saw must be > 0")
    return max(1, math.ceil(f_saw / max_injection_frequency(gamma, epsilon)))


def _history_needed(n_max: int, beta: float, x: float, floor: float = 1e-18, limit: int = 256) -> int:
    # previous cycles whose spillover probability is still above `floor`
    k = 1
    while k < limit and n_max * beta * x ** (k + 1) > floor:
        k += 1
    return k


def window_count_distribution(n: int, p_miss: float, p_extra: float, beta: float, x: float,
                              history: int | None = None) -> np.ndarray:
    """Exact photon-count distribution of a steady-state window.

    ``history`` previous cycles are enumerated (at least one, i.e. the current
    and the preceding cycle); by default enough to push the neglected
    spillover below 1e-18.
    """
    if history is None:
        history = _history_needed(n + 1, beta, x)
    history = max(1, int(history))
    outcomes = [(n - 1, p_miss), (n, 1.0 - p_miss - p_extra), (n + 1, p_extra)]
    support = np.arange(n + 2)
    total = np.array([1.0])
    for k in range(history + 1):
        q = beta * (1.0 - x) * x ** k if x < 1 else 0.0
        part = np.zeros(n + 2)
        for c, w in outcomes:
            if w > 0 and c >= 0:
                part += w * binom.pmf(support, c, q)
        total = np.convolve(total, part)
    return total


def _classify(dist: np.ndarray, n: int) -> tuple[float, float]:
    return float(dist[:n].sum()), float(dist[n + 1:].sum())


def accuracy_budget(pump: PumpModel, recomb: RecombinationModel, target: AccuracyTarget | None = None,
                    history: int | None = None) -> BudgetReport:
    """Probabilities of a missing-photon and a multi-photon window, with per-mechanism breakdown.

    Each entry of ``contributions`` switches on one mechanism alone (pump
    miss, pump extra, non-radiative loss, late-emission spillover) and
    reports the resulting pair of probabilities.
    """
    target = target or AccuracyTarget()
    n = pump.spec.electrons_per_packet
    gamma_t = recomb.total_rate * pump.period
    x = math.exp(-gamma_t)
    beta = recomb.branching_ratio
    if history is None:
        history = _history_needed(n + 1, beta, x)

    dist = window_count_distribution(n, pump.p_miss, pump.p_extra, beta, x, history)
    p_zero, p_multi = _classify(dist, n)
    p_late = float(-math.expm1(n * math.log1p(-x))) if x < 1 else 1.0

    isolated = {
        "pump_miss": (pump.p_miss, 0.0, 1.0, 0.0),
        "pump_extra": (0.0, pump.p_extra, 1.0, 0.0),
        "nonradiative_loss": (0.0, 0.0, beta, 0.0),
        "late_emission_spillover": (0.0, 0.0, 1.0, x),
    }
    contributions = {}
    for label, (pm, pe, b, xx) in isolated.items():
        z, m = _classify(window_count_distribution(n, pm, pe, b, xx, history), n)
        contributions[label] = {"p_zero_photon": z, "p_multi_photon": m}

    eps = target.epsilon
    passed = {
        "missing_photon": p_zero <= eps,
        "multi_photon": p_multi <= eps,
        "late_emission": p_late <= eps,
    }
    return BudgetReport(p_zero, p_multi, p_late, contributions, passed, eps, history)


SWEEP_PARAMETERS = (
    "saw_frequency", "radiative_rate", "nonradiative_rate", "divider",
    "electrons_per_packet", "p_miss", "p_extra", "efficiency",
)
_INT_PARAMETERS = {"divider", "electrons_per_packet"}

SWEEP_METRICS = (
    "injection_period_s", "gamma_t", "p_zero_photon", "p_multi_photon", "p_late_emission",
    "pass_missing_photon", "pass_multi_photon", "pass_late_emission", "min_divider",
    "predicted_rate_per_s",
)
MC_METRICS = ("mc_mandel_q", "mc_g2_ratio")


class SweepError(ValueError):
    pass


def _apply_point(base: Experiment, point: dict) -> Experiment:
    p = base.pump
    spec = p.spec
    spec = InjectionSpec(
        int(point.get("electrons_per_packet", spec.electrons_per_packet)),
        int(point.get("divider", spec.divider)),
        float(point.get("saw_frequency", spec.saw_frequency)),
    )
    pump = PumpModel(spec, float(point.get("p_miss", p.p_miss)), float(point.get("p_extra", p.p_extra)),
                     p.cycle_jitter)
    r = base.recombination
    recomb = RecombinationModel(float(point.get("radiative_rate", r.radiative_rate)),
                                float(point.get("nonradiative_rate", r.nonradiative_rate)))
    det = replace(base.detector, efficiency=float(point.get("efficiency", base.detector.efficiency)))
    return replace(base, pump=pump, recombination=recomb, detector=det)


def _mc_metrics(exp: Experiment, seed: int, n_cycles: int) -> dict:
    exp = replace(exp, n_cycles=n_cycles, shards=1)
    res = run_experiment(exp, RngSpec(seed))
    T = exp.pump.period
    out = {"mc_mandel_q": math.nan, "mc_g2_ratio": math.nan}
    try:
        out["mc_mandel_q"] = mandel_q(count_in_windows(res.detections, 100 * T, n_cycles * T))
    except ValueError:
        pass
    try:
        g2 = g2_histogram(res.detections.times, T / 20, 3.5 * T)
        out["mc_g2_ratio"] = pulse_peak_areas(g2, T).ratio
    except ValueError:
        pass
    return out


def _evaluate(base: Experiment, point: dict, epsilon: float, mc: bool, seed: int, mc_cycles: int) -> dict:
    exp = _apply_point(base, point)
    pump, recomb = exp.pump, exp.recombination
    rep = accuracy_budget(pump, recomb, AccuracyTarget(epsilon))
    spec = pump.spec
    row = dict(point)
    row.update({
        "injection_period_s": pump.period,
        "gamma_t": recomb.total_rate * pump.period,
        "p_zero_photon": rep.p_zero_photon,
        "p_multi_photon": rep.p_multi_photon,
        "p_late_emission": rep.p_late_emission,
        "pass_missing_photon": rep.passed["missing_photon"],
        "pass_multi_photon": rep.passed["multi_photon"],
        "pass_late_emission": rep.passed["late_emission"],
        "min_divider": min_divider(spec.saw_frequency, recomb.total_rate, epsilon),
        "predicted_rate_per_s": (spec.electrons_per_packet * spec.saw_frequency / spec.divider
                                 * recomb.branching_ratio * exp.detector.efficiency),
    })
    if mc:
        row.update(_mc_metrics(exp, seed, mc_cycles))
    return row


def sweep(base: Experiment, grid: dict, epsilon: float = DEFAULT_EPSILON, *, mc: bool = False,
          seed: int = 0, mc_cycles: int = 20_000, max_points: int = 10_000, workers: int = 1) -> list[dict]:
    """Evaluate the budget at every point of a Cartesian parameter grid.

    Rows come back in lexicographic grid order (parameters in
    :data:`SWEEP_PARAMETERS` order, values in the order given) whatever the
    number of workers.
    """
    unknown = set(grid) - set(SWEEP_PARAMETERS)
    if unknown:
        raise SweepError(f"unknown sweep parameter(s): {sorted(unknown)}")
    names = [k for k in SWEEP_PARAMETERS if k in grid]
    values = [list(grid[k]) for k in names]
    n_points = math.prod(len(v) for v in values) if names else 0
    if n_points == 0:
        raise SweepError("grid has no points")
    if n_points > max_points:
        raise SweepError(f"grid has {n_points} points, above the cap of {max_points}")
    for name, vals in zip(names, values):
        if name in _INT_PARAMETERS and any(int(v) != v for v in vals):
            raise SweepError(f"{name} values must be integers")
    points = [dict(zip(names, combo)) for combo in itertools.product(*values)]
    # validate every point before doing any work
    for point in points:
        try:
            _apply_point(base, point)
        except ValueError as exc:
            raise SweepError(f"invalid grid point {point}: {exc}") from exc

    def run(point):
        return _evaluate(base, point, epsilon, mc, seed, mc_cycles)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, points))
    return [run(p) for p in points]


__all__ = [
    "AccuracyTarget", "BudgetReport", "DEFAULT_EPSILON", "DetectorModel", "MC_METRICS", "SWEEP_METRICS",
    "SWEEP_PARAMETERS", "SweepError", "accuracy_budget", "min_divider", "sweep", "window_count_distribution",
]
