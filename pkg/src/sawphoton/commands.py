"""Implementations behind the command-line subcommands.

Every numeric output is written with Python's shortest round-trip float
repr, so files parse back to the exact values they were produced from.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import units
from .config import RunConfig, config_to_dict
from .design import (SWEEP_METRICS, SWEEP_PARAMETERS, MC_METRICS, AccuracyTarget, accuracy_budget, min_divider,
                     sweep)
from .mc import run_experiment
from .physics import (emitted_count_pmf, max_injection_frequency, min_iregion_length, quantized_current,
                      screening_hole_density)
from .rng import RngSpec
from .stats import (count_in_windows, fano_factor, g2_histogram, mandel_q, mandel_q_stderr, phase_correlation,
                    pulse_peak_areas)

IREGION_SAFETY = 0.25


def _num(x):
    """JSON-safe scalar: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _quantity(si, unit, display=None, display_unit=None) -> dict:
    out = {"si": _num(si), "unit": unit}
    if display_unit is not None:
        out["display"] = {"value": _num(display), "unit": display_unit}
    return out


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def cmd_analytic(cfg: RunConfig, epsilon: float = 1e-6) -> dict:
    saw, junc, pump, rec = cfg.saw, cfg.junction, cfg.pump, cfg.recombination
    n = pump.spec.electrons_per_packet
    T = pump.period
    gamma = rec.total_rate
    f_max = max_injection_frequency(gamma, epsilon)
    density = screening_hole_density(saw.amplitude, saw.wavevector, junc.dielectric_constant)
    length = min_iregion_length(junc.band_drop, saw, IREGION_SAFETY)
    pmf = emitted_count_pmf(n, gamma, T)
    return {
        "epsilon": epsilon,
        "saw_current": _quantity(quantized_current(n, saw.frequency), "A",
                                 units.to_pa(quantized_current(n, saw.frequency)), "pA"),
        "injection_current": _quantity(quantized_current(n, pump.spec.injection_rate), "A",
                                       units.to_pa(quantized_current(n, pump.spec.injection_rate)), "pA"),
        "wavelength": _quantity(saw.wavelength, "m", units.to_um(saw.wavelength), "um"),
        "wavevector": _quantity(saw.wavevector, "1/m"),
        "screening_hole_density": _quantity(density, "1/m^2", units.to_per_cm2(density), "1/cm^2"),
        "min_iregion_length": {**_quantity(length, "m", units.to_um(length), "um"), "safety": IREGION_SAFETY},
        "max_injection_frequency": _quantity(f_max, "Hz", units.to_ghz(f_max), "GHz"),
        "max_injection_current": _quantity(quantized_current(1, f_max), "A",
                                           units.to_pa(quantized_current(1, f_max)), "pA"),
        "min_divider": min_divider(saw.frequency, gamma, epsilon),
        "injection_period": _quantity(T, "s", units.to_ns(T), "ns"),
        "gamma_t": _num(gamma * T),
        "emitted_count_pmf_at_period": [_num(p) for p in pmf.probabilities],
    }


SIMULATE_FILES = ("emissions.csv", "detections.csv", "counts.csv", "g2.csv", "phase.csv", "summary.json")


def _write_csv(path: Path, header: str, columns) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in zip(*columns))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def analyse(cfg: RunConfig, result) -> tuple[dict, dict]:
    """Histograms and scalar metrics of a run's detection stream."""
    T = cfg.pump.period
    a = cfg.analysis
    det = result.detections
    window = a.window_cycles * T
    span = cfg.run.n_cycles * T
    hist = count_in_windows(det, window, span) if window <= span else None
    bin_width = T / a.g2_bins_per_period
    g2 = g2_histogram(det.times, bin_width, a.g2_max_periods * T)
    phase = phase_correlation(det.times, T, a.phase_bins) if len(det) else None

    metrics = {"mandel_q": None, "mandel_q_stderr": None, "fano_factor": None,
               "g2_zero_peak_area": None, "g2_mean_side_peak_area": None, "g2_ratio": None,
               "phase_visibility": None}
    if hist is not None and hist.counts.sum() > 0 and hist.n_windows >= 2:
        metrics["mandel_q"] = _num(mandel_q(hist))
        metrics["fano_factor"] = _num(fano_factor(hist))
        metrics["mandel_q_stderr"] = _num(mandel_q_stderr(hist))
    try:
        peaks = pulse_peak_areas(g2, T)
        metrics.update(g2_zero_peak_area=_num(peaks.zero_peak_area),
                       g2_mean_side_peak_area=_num(peaks.mean_side_peak_area), g2_ratio=_num(peaks.ratio))
        convention = peaks.convention
    except ValueError:
        convention = None
    if phase is not None:
        metrics["phase_visibility"] = _num(phase.visibility)
    histograms = {"counts": hist, "g2": g2, "phase": phase}
    layout = {"count_window_s": window, "count_span_s": span, "g2_bin_width_s": bin_width,
              "g2_max_delay_s": g2.max_delay, "phase_period_s": T, "phase_bins": a.phase_bins,
              "g2_peak_convention": convention}
    return {"metrics": metrics, "layout": layout}, histograms


def cmd_simulate(cfg: RunConfig, out_dir, shards: int | None = None) -> dict:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    result = run_experiment(cfg.experiment(shards), RngSpec(cfg.run.seed))
    analysis, hists = analyse(cfg, result)

    em, det = result.emissions, result.detections
    _write_csv(out / "emissions.csv", "cycle_index,timestamp_s", (em.cycle_index, em.times))
    _write_csv(out / "detections.csv", "timestamp_s,is_dark", (det.times, det.is_dark.astype(int)))
    counts = hists["counts"]
    c = counts.counts if counts is not None else np.zeros(0, dtype=int)
    _write_csv(out / "counts.csv", "window_index,count", (np.arange(len(c)), c))
    g2 = hists["g2"]
    _write_csv(out / "g2.csv", "tau_s,pair_count", (g2.delays, g2.bins))
    phase = hists["phase"]
    if phase is not None:
        _write_csv(out / "phase.csv", "phase_bin_start_s,count", (phase.bin_starts, phase.counts))
    else:
        _write_csv(out / "phase.csv", "phase_bin_start_s,count", ((), ()))

    totals = {k: _num(v) for k, v in result.summary.items()}
    summary = {
        "seed": cfg.run.seed,
        "totals": totals,
        "metrics": analysis["metrics"],
        "layout": {k: (_num(v) if not isinstance(v, (str, type(None))) else v)
                   for k, v in analysis["layout"].items()},
        "config": config_to_dict(cfg),
    }
    _write_text(out / "summary.json", to_json(summary))
    return summary


def cmd_design(cfg: RunConfig, epsilon: float = 1e-6) -> dict:
    rep = accuracy_budget(cfg.pump, cfg.recombination, AccuracyTarget(epsilon))
    gamma = cfg.recombination.total_rate
    f_max = max_injection_frequency(gamma, epsilon)
    out = rep.to_dict()
    out.update({
        "divider": cfg.pump.spec.divider,
        "min_divider": min_divider(cfg.saw.frequency, gamma, epsilon),
        "max_injection_frequency": _quantity(f_max, "Hz", units.to_ghz(f_max), "GHz"),
        "gamma_t": gamma * cfg.pump.period,
    })
    return out


def load_grid(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not isinstance(doc, dict) or not all(isinstance(v, list) for v in doc.values()):
        raise ValueError("grid file must map parameter names to lists of values")
    return doc


def cmd_sweep(cfg: RunConfig, grid: dict, out_path, epsilon: float = 1e-6, mc: bool = False,
              max_points: int = 10_000, workers: int = 1) -> list[dict]:
    rows = sweep(cfg.experiment(), grid, epsilon, mc=mc, seed=cfg.run.seed, max_points=max_points,
                 workers=workers)
    params = [k for k in SWEEP_PARAMETERS if k in grid]
    metrics = list(SWEEP_METRICS) + (list(MC_METRICS) if mc else [])
    cols = params + metrics
    columns = [[row[c] for row in rows] for c in cols]
    _write_csv(Path(out_path), ",".join(cols), columns)
    return rows
