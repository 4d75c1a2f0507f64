"""Sweep the translation and rotation filter cut-offs and print the error grid.

    python scripts/filter_sweep.py --grid 2,5,13,31,60,90 --workers 4
"""

import argparse
import math
from pathlib import Path

from shipland.config import parse_config
from shipland.simkit import ScenarioConfig, sweep_filter_cutoff, write_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", type=Path)
    ap.add_argument("--grid", default="2,5,13,31,60,90")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("sweep.csv"))
    args = ap.parse_args()

    grid = [float(v) for v in args.grid.split(",")]
    base = parse_config(args.scenario) if args.scenario else ScenarioConfig()
    rows = sweep_filter_cutoff(base, grid, grid, workers=args.workers)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_table(args.out, rows)

    table = {(r.omega_translation, r.omega_rotation): r.mean_error for r in rows}
    print("rows: translation cut-off, columns: rotation cut-off, cells: mean error [m]")
    print("        " + "".join(f"{w:>10g}" for w in grid))
    for wt in grid:
        cells = (f"{'diverged':>10s}" if not math.isfinite(table[(wt, wr)]) else f"{table[(wt, wr)]:10.4f}" for wr in grid)
        print(f"{wt:>8g}" + "".join(cells))
    best = min(table, key=table.get)
    print(f"best cell {best} at {table[best]:.4f} m; table written to {args.out}")


if __name__ == "__main__":
    main()
