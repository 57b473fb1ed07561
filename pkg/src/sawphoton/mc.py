"""Stochastic injection, emission and detection streams.

The pump fires a packet every injection period ``T = M / f``; each electron
recombines after an exponential delay and emits a photon with probability
equal to the radiative branching ratio; a detector thins, smears and
dead-time-filters the photon stream and adds dark counts.

Randomness is keyed per block of :data:`BLOCK_CYCLES` consecutive cycles, not
per worker, so a run is bit-identical for every shard count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .physics import InjectionSpec, InvalidParameter, RecombinationModel, _finite, _require
from .rng import DETECTOR, EMISSION, PUMP, RngSpec

BLOCK_CYCLES = 1 << 16


@dataclass(frozen=True)
class PumpModel:
    """Quantized pump with independent one-electron-short / one-extra errors per injection."""

    spec: InjectionSpec
    p_miss: float = 5e-5
    p_extra: float = 5e-5
    cycle_jitter: float = 0.0

    def __post_init__(self):
        _require(_finite(self.p_miss) and self.p_miss >= 0, "p_miss", "must be >= 0")
        _require(_finite(self.p_extra) and self.p_extra >= 0, "p_extra", "must be >= 0")
        _require(self.p_miss + self.p_extra <= 1, "p_extra", "p_miss + p_extra must be <= 1")
        _require(_finite(self.cycle_jitter) and self.cycle_jitter >= 0, "cycle_jitter", "must be >= 0")

    @property
    def period(self) -> float:
        return self.spec.injection_period

    @property
    def mean_electrons(self) -> float:
        n = self.spec.electrons_per_packet
        return n + self.p_extra - self.p_miss


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 0.0
    jitter: float = 0.0

    def __post_init__(self):
        _require(_finite(self.efficiency) and 0 <= self.efficiency <= 1, "efficiency", "must lie in [0, 1]")
        for name in ("dark_rate", "dead_time", "jitter"):
            value = getattr(self, name)
            _require(_finite(value) and value >= 0, name, "must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return self.efficiency == 1 and self.dark_rate == 0 and self.dead_time == 0 and self.jitter == 0


@dataclass(frozen=True, eq=False)
class InjectionTrace:
    cycle_index: np.ndarray
    cycle_times: np.ndarray
    electron_counts: np.ndarray
    period: float

    def __len__(self):
        return len(self.cycle_times)

    @property
    def total_electrons(self) -> int:
        return int(self.electron_counts.sum())

    @property
    def end_time(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(max((int(self.cycle_index.max()) + 1) * self.period, self.cycle_times.max()))


@dataclass(frozen=True, eq=False)
class EmissionTrace:
    """Photon emission times, sorted, with the cycle each photon's electron was injected in."""

    times: np.ndarray
    cycle_index: np.ndarray
    duration: float

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True, eq=False)
class DetectionTrace:
    times: np.ndarray
    is_dark: np.ndarray
    duration: float

    def __len__(self):
        return len(self.times)

    @property
    def n_dark(self) -> int:
        return int(self.is_dark.sum())


def generate_injections(pump: PumpModel, n_cycles: int, rng: RngSpec, start_cycle: int = 0) -> InjectionTrace:
    """Draw electron counts and injection times for ``n_cycles`` packets starting at ``start_cycle``."""
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    gen = rng.generator(PUMP)
    n = pump.spec.electrons_per_packet
    T = pump.period
    u = gen.random(n_cycles)
    counts = np.full(n_cycles, n, dtype=np.int64)
    counts[u < pump.p_miss] = n - 1
    counts[(u >= pump.p_miss) & (u < pump.p_miss + pump.p_extra)] = n + 1
    np.maximum(counts, 0, out=counts)

    index = np.arange(start_cycle, start_cycle + n_cycles, dtype=np.int64)
    times = index * T
    if pump.cycle_jitter > 0:
        times = np.maximum(times + gen.normal(0.0, pump.cycle_jitter, n_cycles), 0.0)
        order = np.argsort(times, kind="stable")
        index, times, counts = index[order], times[order], counts[order]
    return InjectionTrace(index, times, counts, T)


def generate_emissions(inj: InjectionTrace, recomb: RecombinationModel, rng: RngSpec,
                       horizon_multiple: float = 50.0) -> EmissionTrace:
    """Recombine every injected electron and keep the radiative events.

    One lifetime is drawn per electron at the total rate; the branch is then
    radiative with probability ``gamma_r / gamma``. The trace's duration extends
    ``horizon_multiple`` lifetimes past the last injection period.
    """
    gen = rng.generator(EMISSION)
    counts = inj.electron_counts
    owner = np.repeat(np.arange(len(inj)), counts)
    lifetimes = gen.exponential(1.0 / recomb.total_rate, owner.size)
    radiative = gen.random(owner.size) < recomb.branching_ratio
    owner = owner[radiative]
    times = inj.cycle_times[owner] + lifetimes[radiative]
    cycles = inj.cycle_index[owner]
    order = np.lexsort((cycles, times))
    times, cycles = times[order], cycles[order]
    duration = inj.end_time + horizon_multiple / recomb.total_rate
    if times.size:
        duration = max(duration, float(times[-1]))
    return EmissionTrace(times, cycles, duration)


def _dead_time_filter(times: np.ndarray, dead_time: float) -> np.ndarray:
    keep = np.zeros(times.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(times.tolist()):
        if t - last >= dead_time:
            keep[i] = True
            last = t
    return keep


def apply_detector(em: EmissionTrace, det: DetectorModel, duration: float, rng: RngSpec) -> DetectionTrace:
    """Thin by efficiency, smear by timing jitter, add dark counts, then apply non-paralyzable dead time."""
    if duration < em.duration:
        raise ValueError(f"detector duration {duration} shorter than emission trace {em.duration}")
    gen = rng.generator(DETECTOR)
    kept = gen.random(len(em)) < det.efficiency
    times = em.times[kept]
    if det.jitter > 0:
        times = times + gen.normal(0.0, det.jitter, times.size)
    n_dark = gen.poisson(det.dark_rate * duration) if det.dark_rate > 0 else 0
    dark = gen.uniform(0.0, duration, n_dark)

    all_times = np.concatenate([times, dark])
    is_dark = np.concatenate([np.zeros(times.size, dtype=bool), np.ones(dark.size, dtype=bool)])
    inside = (all_times >= 0) & (all_times <= duration)
    all_times, is_dark = all_times[inside], is_dark[inside]
    order = np.lexsort((is_dark, all_times))
    all_times, is_dark = all_times[order], is_dark[order]
    if det.dead_time > 0:
        keep = _dead_time_filter(all_times, det.dead_time)
        all_times, is_dark = all_times[keep], is_dark[keep]
    return DetectionTrace(all_times, is_dark, duration)


def counts_by_horizon(inj: InjectionTrace, em: EmissionTrace, horizon: float) -> np.ndarray:
    """Photons emitted within ``horizon`` of their own injection, per injected cycle."""
    first = int(inj.cycle_index.min())
    pos = np.empty(len(inj), dtype=np.int64)
    pos[inj.cycle_index - first] = np.arange(len(inj))
    slot = pos[em.cycle_index - first]
    delay = em.times - inj.cycle_times[slot]
    return np.bincount(slot[delay <= horizon], minlength=len(inj))


@dataclass(frozen=True)
class Experiment:
    """Everything needed for one Monte Carlo run apart from the seed."""

    pump: PumpModel
    recombination: RecombinationModel
    detector: DetectorModel = field(default_factory=DetectorModel)
    n_cycles: int = 100_000
    shards: int = 1
    horizon_multiple: float = 50.0

    def __post_init__(self):
        _require(isinstance(self.n_cycles, int) and self.n_cycles >= 1, "n_cycles", "must be an integer >= 1")
        _require(isinstance(self.shards, int) and self.shards >= 1, "shards", "must be an integer >= 1")
        _require(_finite(self.horizon_multiple) and self.horizon_multiple >= 0,
                 "horizon_multiple", "must be >= 0")

    @property
    def duration(self) -> float:
        return self.n_cycles * self.pump.period + self.horizon_multiple / self.recombination.total_rate


@dataclass(frozen=True, eq=False)
class RunResult:
    injections: InjectionTrace
    emissions: EmissionTrace
    detections: DetectionTrace
    summary: dict


def _run_block(exp: Experiment, rng: RngSpec, block: int):
    start = block * BLOCK_CYCLES
    n = min(BLOCK_CYCLES, exp.n_cycles - start)
    key = rng.with_index(block)
    inj = generate_injections(exp.pump, n, key, start_cycle=start)
    em = generate_emissions(inj, exp.recombination, key, exp.horizon_multiple)
    return inj, em


def _run_shard(exp: Experiment, rng: RngSpec, blocks: range):
    return [_run_block(exp, rng, b) for b in blocks]


def _concat_injections(parts, period):
    return InjectionTrace(
        np.concatenate([p.cycle_index for p in parts]),
        np.concatenate([p.cycle_times for p in parts]),
        np.concatenate([p.electron_counts for p in parts]),
        period,
    )


def run_experiment(exp: Experiment, rng: RngSpec) -> RunResult:
    """Pump, recombine and detect ``exp.n_cycles`` cycles.

    Blocks of cycles are spread over ``exp.shards`` worker threads. Block ``b``
    always uses stream ``b`` of the master seed, and the merged emission trace
    is re-sorted by (time, cycle), so the output does not depend on the shard
    count or completion order.
    """
    n_blocks = -(-exp.n_cycles // BLOCK_CYCLES)
    shards = min(exp.shards, n_blocks)
    bounds = np.linspace(0, n_blocks, shards + 1).round().astype(int)
    ranges = [range(bounds[i], bounds[i + 1]) for i in range(shards)]
    if shards == 1:
        results = [_run_shard(exp, rng, ranges[0])]
    else:
        with ThreadPoolExecutor(max_workers=shards) as pool:
            results = list(pool.map(lambda r: _run_shard(exp, rng, r), ranges))
    blocks = [b for shard in results for b in shard]

    inj = _concat_injections([b[0] for b in blocks], exp.pump.period)
    times = np.concatenate([b[1].times for b in blocks])
    cycles = np.concatenate([b[1].cycle_index for b in blocks])
    order = np.lexsort((cycles, times))
    times, cycles = times[order], cycles[order]
    duration = exp.duration
    if times.size:
        duration = max(duration, float(times[-1]))
    em = EmissionTrace(times, cycles, duration)

    det = apply_detector(em, exp.detector, duration, rng.with_index(0))
    summary = {
        "n_cycles": exp.n_cycles,
        "injection_period_s": exp.pump.period,
        "duration_s": duration,
        "total_electrons": inj.total_electrons,
        "total_photons": len(em),
        "total_detections": len(det),
        "dark_detections": det.n_dark,
    }
    return RunResult(inj, em, det, summary)


__all__ = [
    "BLOCK_CYCLES", "DetectionTrace", "DetectorModel", "EmissionTrace", "Experiment", "InjectionTrace",
    "InvalidParameter", "PumpModel", "RunResult", "apply_detector", "counts_by_horizon",
    "generate_emissions", "generate_injections", "run_experiment",
]
