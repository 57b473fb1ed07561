"""JSON run configuration.

A configuration document looks like::

    {
      "saw": {"frequency": 3e9, "sound_velocity": 3000, "amplitude": 0.03},
      "junction": {"band_drop": 1.5, "dielectric_constant": 12},
      "pump": {"electrons_per_packet": 1, "divider": 5, "p_miss": 5e-5, "p_extra": 5e-5},
      "recombination": {"radiative_rate": 1e10, "nonradiative_rate": 0},
      "detector": {"efficiency": 0.1, "dark_rate": 100, "dead_time": 5e-8, "jitter": 5e-11},
      "run": {"n_cycles": 1000000, "seed": 1, "shards": 4, "horizon_multiple": 50},
      "analysis": {"window_cycles": 100, "g2_bins_per_period": 40, "g2_max_periods": 3.5, "phase_bins": 50}
    }

``saw``, ``pump``, ``recombination`` and ``run`` are required; the other
blocks and most fields have defaults. Unknown keys are rejected and every
error names the offending path, e.g. ``pump.p_miss``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mc import DetectorModel, Experiment, PumpModel
from .physics import InjectionSpec, InvalidParameter, JunctionParams, RecombinationModel, SawParams

_U64 = (1 << 64) - 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


@dataclass(frozen=True)
class RunSettings:
    n_cycles: int
    seed: int = 0
    shards: int = 1
    horizon_multiple: float = 50.0


@dataclass(frozen=True)
class AnalysisSettings:
    window_cycles: int = 100
    g2_bins_per_period: int = 40
    g2_max_periods: float = 3.5
    phase_bins: int = 50


@dataclass(frozen=True)
class RunConfig:
    saw: SawParams
    pump: PumpModel
    recombination: RecombinationModel
    run: RunSettings
    junction: JunctionParams = field(default_factory=JunctionParams)
    detector: DetectorModel = field(default_factory=DetectorModel)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)

    def experiment(self, shards: int | None = None) -> Experiment:
        return Experiment(self.pump, self.recombination, self.detector, self.run.n_cycles,
                          shards or self.run.shards, self.run.horizon_multiple)

    def with_seed(self, seed: int) -> RunConfig:
        _check_seed(seed, "run.seed")
        return replace(self, run=replace(self.run, seed=seed))


# (name, kind, default); a default of ... marks a required field
_SCHEMA = {
    "saw": [("frequency", "float", ...), ("sound_velocity", "float", 3000.0), ("amplitude", "float", 0.03)],
    "junction": [("band_drop", "float", 1.5), ("dielectric_constant", "float", 12.0),
                 ("hole_density", "float", 1e15), ("iregion_length", "float", 3.2e-5)],
    "pump": [("electrons_per_packet", "int", 1), ("divider", "int", 1), ("p_miss", "float", 5e-5),
             ("p_extra", "float", 5e-5), ("cycle_jitter", "float", 0.0)],
    "recombination": [("radiative_rate", "float", ...), ("nonradiative_rate", "float", 0.0)],
    "detector": [("efficiency", "float", 1.0), ("dark_rate", "float", 0.0), ("dead_time", "float", 0.0),
                 ("jitter", "float", 0.0)],
    "run": [("n_cycles", "int", ...), ("seed", "int", 0), ("shards", "int", 1),
            ("horizon_multiple", "float", 50.0)],
    "analysis": [("window_cycles", "int", 100), ("g2_bins_per_period", "int", 40),
                 ("g2_max_periods", "float", 3.5), ("phase_bins", "int", 50)],
}
_REQUIRED_BLOCKS = ("saw", "pump", "recombination", "run")


def _coerce(value, kind: str, path: str):
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _block(doc: dict, name: str) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected an object")
    spec = _SCHEMA[name]
    known = {f for f, _, _ in spec}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    out = {}
    for fname, kind, default in spec:
        path = f"{name}.{fname}"
        if fname in raw:
            out[fname] = _coerce(raw[fname], kind, path)
        elif default is ...:
            raise ConfigError(path, "required field missing")
        else:
            out[fname] = default
    return out


def _check_seed(seed, path):
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= _U64:
        raise ConfigError(path, "seed must be an unsigned 64-bit integer")


def _build(block: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except InvalidParameter as exc:
        raise ConfigError(f"{block}.{exc.field}", exc.message) from None


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("", "configuration must be a JSON object")
    for key in doc:
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
    for key in _REQUIRED_BLOCKS:
        if key not in doc:
            raise ConfigError(key, "required block missing")
    b = {name: _block(doc, name) for name in _SCHEMA}

    saw = _build("saw", SawParams, **b["saw"])
    junction = _build("junction", JunctionParams, **b["junction"])
    p = b["pump"]
    spec = _build("pump", InjectionSpec, electrons_per_packet=p["electrons_per_packet"], divider=p["divider"],
                  saw_frequency=saw.frequency)
    pump = _build("pump", PumpModel, spec=spec, p_miss=p["p_miss"], p_extra=p["p_extra"],
                  cycle_jitter=p["cycle_jitter"])
    recomb = _build("recombination", RecombinationModel, **b["recombination"])
    detector = _build("detector", DetectorModel, **b["detector"])

    r = b["run"]
    if r["n_cycles"] < 1:
        raise ConfigError("run.n_cycles", "must be >= 1")
    _check_seed(r["seed"], "run.seed")
    if r["shards"] < 1:
        raise ConfigError("run.shards", "must be >= 1")
    if r["horizon_multiple"] < 0:
        raise ConfigError("run.horizon_multiple", "must be >= 0")
    run = RunSettings(**r)

    a = b["analysis"]
    if a["window_cycles"] < 1:
        raise ConfigError("analysis.window_cycles", "must be >= 1")
    if a["g2_bins_per_period"] < 3:
        raise ConfigError("analysis.g2_bins_per_period", "must be >= 3")
    if a["g2_max_periods"] < 3:
        raise ConfigError("analysis.g2_max_periods", "must be >= 3")
    if a["phase_bins"] < 2:
        raise ConfigError("analysis.phase_bins", "must be >= 2")
    analysis = AnalysisSettings(**a)
    return RunConfig(saw, pump, recomb, run, junction, detector, analysis)


def parse_config(source) -> RunConfig:
    """Parse a configuration from a path or from JSON text."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("", f"cannot read {source}: {exc.strerror or exc}") from None
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "saw": {"frequency": cfg.saw.frequency, "sound_velocity": cfg.saw.sound_velocity,
                "amplitude": cfg.saw.amplitude},
        "junction": {"band_drop": cfg.junction.band_drop, "dielectric_constant": cfg.junction.dielectric_constant,
                     "hole_density": cfg.junction.hole_density, "iregion_length": cfg.junction.iregion_length},
        "pump": {"electrons_per_packet": cfg.pump.spec.electrons_per_packet, "divider": cfg.pump.spec.divider,
                 "p_miss": cfg.pump.p_miss, "p_extra": cfg.pump.p_extra, "cycle_jitter": cfg.pump.cycle_jitter},
        "recombination": {"radiative_rate": cfg.recombination.radiative_rate,
                          "nonradiative_rate": cfg.recombination.nonradiative_rate},
        "detector": {"efficiency": cfg.detector.efficiency, "dark_rate": cfg.detector.dark_rate,
                     "dead_time": cfg.detector.dead_time, "jitter": cfg.detector.jitter},
        "run": {"n_cycles": cfg.run.n_cycles, "seed": cfg.run.seed, "shards": cfg.run.shards,
                "horizon_multiple": cfg.run.horizon_multiple},
        "analysis": {"window_cycles": cfg.analysis.window_cycles,
                     "g2_bins_per_period": cfg.analysis.g2_bins_per_period,
                     "g2_max_periods": cfg.analysis.g2_max_periods, "phase_bins": cfg.analysis.phase_bins},
    }


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
