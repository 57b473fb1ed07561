"""Command-line entry point: ``sawphoton {analytic,simulate,design,sweep,verify}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 a ``verify``
check failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import units
from .commands import cmd_analytic, cmd_design, cmd_simulate, cmd_sweep, load_grid, to_json
from .config import ConfigError, parse_config
from .design import SweepError, min_divider
from .physics import (SawParams, emitted_count_pmf, field_state_diagonal, max_injection_frequency,
                      min_iregion_length, quantized_current, screening_hole_density)

log = logging.getLogger("sawphoton")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _epsilon(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sawphoton", description="SAW-driven single-photon source simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=_u64, help="override run.seed")
        return p

    p = with_config(sub.add_parser("analytic", help="closed-form device numbers as JSON"))
    p.add_argument("--epsilon", type=_epsilon, default=1e-6)

    p = with_config(sub.add_parser("simulate", help="Monte Carlo run; writes CSV traces and summary.json"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--shards", type=_positive_int, help="override run.shards")

    p = with_config(sub.add_parser("design", help="accuracy budget as JSON"))
    p.add_argument("--epsilon", type=_epsilon, default=1e-6)

    p = with_config(sub.add_parser("sweep", help="budget over a parameter grid; writes sweep.csv"))
    p.add_argument("--grid", required=True, help="JSON object mapping parameter names to value lists")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--epsilon", type=_epsilon, default=1e-6)
    p.add_argument("--mc", action="store_true", help="add Monte Carlo Mandel Q and g2 ratio columns")
    p.add_argument("--max-points", type=_positive_int, default=10_000)
    p.add_argument("--shards", type=_positive_int, default=1, help="worker threads")

    sub.add_parser("verify", help="check the headline device numbers")
    return ap


def verify_checks():
    """(name, value, passed) for each headline number."""
    gamma, eps = 1e10, 1e-6
    f_max = max_injection_frequency(gamma, eps)
    current = quantized_current(1, f_max)
    saw = SawParams(3e9, 3000.0, 0.03)
    density = screening_hole_density(0.03, 2 * math.pi / 1e-6, 12.0)
    length = min_iregion_length(1.5, saw, 0.25)
    m = min_divider(3e9, gamma, eps)
    worst = 0.0
    rng = np.random.default_rng(7)
    for n in (1, 2, 10, 100, 1000):
        for gt in rng.uniform(0, 700, 4):
            a = field_state_diagonal(n, 1.0, gt).probabilities
            b = emitted_count_pmf(n, 1.0, gt).probabilities
            worst = max(worst, float(np.abs(a - b).max()))
    return [
        ("max injection frequency [GHz]", units.to_ghz(f_max), abs(units.to_ghz(f_max) - 0.72) <= 0.01),
        ("max injection current [pA]", units.to_pa(current), abs(units.to_pa(current) - 115) <= 2),
        ("screening hole density [cm^-2]", units.to_per_cm2(density), 1e10 <= units.to_per_cm2(density) <= 2e10),
        ("minimum divider M", m, m == 5 and m < 10),
        ("i-region length [um]", units.to_um(length), 10 <= units.to_um(length) <= 100),
        ("field diagonal vs emitted-count pmf, max |diff|", worst, worst <= 1e-12),
    ]


def _load(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def run(args) -> int:
    if args.command == "verify":
        ok = True
        for name, value, passed in verify_checks():
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.6g}")
            ok &= passed
        return EXIT_OK if ok else EXIT_VERIFY

    cfg = _load(args)
    if args.command == "analytic":
        sys.stdout.write(to_json(cmd_analytic(cfg, args.epsilon)))
    elif args.command == "simulate":
        summary = cmd_simulate(cfg, args.out, args.shards)
        log.info("wrote %s (%d detections)", args.out, summary["totals"]["total_detections"])
    elif args.command == "design":
        sys.stdout.write(to_json(cmd_design(cfg, args.epsilon)))
    elif args.command == "sweep":
        try:
            grid = load_grid(args.grid)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None
        cmd_sweep(cfg, grid, args.out, args.epsilon, args.mc, args.max_points, args.shards)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return run(args)
    except (ConfigError, SweepError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
