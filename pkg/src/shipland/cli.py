"""``shipland`` command line: run scenarios, filter sweeps and the tracking suite.

Exit status: 0 success, 2 configuration or usage error, 3 simulation
divergence, 4 landing timeout.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from shipland.config import ConfigError, dump_config, parse_config, parse_config_text
from shipland.simkit import (
    ScenarioConfig,
    SimulationDiverged,
    run_scenario,
    run_suite,
    sweep_filter_cutoff,
    write_table,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_TIMEOUT = 0, 2, 3, 4
OUTPUT_ENV = "SHIPLAND_OUTPUT_DIR"
DEFAULT_GRID = "2,5,13,31,60,90"


def _grid(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("grid values must be positive")
    return values


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shipland", description="Quadrotor ship-landing simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", nargs="?", type=Path, help="TOML scenario file (defaults if omitted)")
    common.add_argument("--seed", type=int, help="override scenario.seed")
    common.add_argument("--tail", type=float, help="override scenario.tail_fraction")
    common.add_argument("--out", type=Path, help=f"output directory (else ${OUTPUT_ENV}, else the current directory)")

    sub.add_parser("run", parents=[common], help="run one scenario; writes trace.csv and metrics.txt")
    sw = sub.add_parser("sweep-filter", parents=[common], help="filter cut-off sweep; writes sweep.csv")
    sw.add_argument("--translation-grid", type=_grid, default=_grid(DEFAULT_GRID), metavar="W1,W2,...")
    sw.add_argument("--rotation-grid", type=_grid, default=_grid(DEFAULT_GRID), metavar="W1,W2,...")
    sw.add_argument("--workers", type=int, default=1)
    su = sub.add_parser("suite", parents=[common], help="tracking and hover suite, wind on/off; writes suite.csv")
    su.add_argument("--workers", type=int, default=1)
    sub.add_parser("print-defaults", help="print the default scenario file")
    return ap


def _load(args) -> ScenarioConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tail is not None:
        overrides["tail_fraction"] = args.tail
    if args.scenario is None:
        return parse_config_text("", overrides)
    return parse_config(args.scenario, overrides)


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get(OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary(m) -> str:
    if m.kind == "ship_landing":
        parts = [f"outcome={m.outcome}", f"seed={m.seed}", f"time_to_land={m.time_to_land:.3f}s"]
        if m.landed:
            parts += [
                f"touchdown_error={m.touchdown_horizontal_error:.3f}m",
                f"touchdown_relative_velocity={m.touchdown_relative_velocity:.3f}m/s",
            ]
        return " ".join(parts)
    return f"outcome={m.outcome} kind={m.kind} seed={m.seed} mean_error={m.mean_error:.4f}m max_error={m.max_error:.4f}m"


def _run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    try:
        result = run_scenario(cfg)
    except SimulationDiverged as exc:
        if exc.trace is not None and len(exc.trace):
            exc.trace.to_csv(out / "trace.csv")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    result.trace.to_csv(out / "trace.csv")
    (out / "metrics.txt").write_text(result.metrics.to_text())
    print(_summary(result.metrics))
    return EXIT_TIMEOUT if result.metrics.outcome == "timed_out" else EXIT_OK


def _sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    rows = sweep_filter_cutoff(cfg, args.translation_grid, args.rotation_grid, workers=args.workers)
    write_table(out / "sweep.csv", rows)
    best = min(rows, key=lambda r: r.mean_error)
    print(
        f"cells={len(rows)} seed={cfg.seed} best_omega_translation={best.omega_translation:g} "
        f"best_omega_rotation={best.omega_rotation:g} best_mean_error={best.mean_error:.4f}m"
    )
    return EXIT_OK


def _suite(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    rows = run_suite(cfg, workers=args.workers)
    write_table(out / "suite.csv", rows)
    print(f"seed={cfg.seed} " + " ".join(f"{r.kind}={r.wind_error:.4f}/{r.no_wind_error:.4f}m" for r in rows))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "print-defaults":
        sys.stdout.write(dump_config(ScenarioConfig()))
        return EXIT_OK
    handler = {"run": _run, "sweep-filter": _sweep, "suite": _suite}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
