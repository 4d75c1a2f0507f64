"""Tail-window tracking error of every trajectory kind with and without wind.

    python scripts/tracking_suite.py --seeds 5
"""

import argparse
from pathlib import Path
from statistics import mean

from shipland.simkit import ScenarioConfig, run_suite, write_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("suite.csv"))
    args = ap.parse_args()

    runs = [run_suite(ScenarioConfig(seed=s), workers=args.workers) for s in range(args.seeds)]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_table(args.out, runs[0])
    print(f"{'kind':12s}{'wind [m]':>12s}{'no wind [m]':>14s}   (mean over {args.seeds} seeds)")
    for i, row in enumerate(runs[0]):
        wind = mean(r[i].wind_error for r in runs)
        calm = mean(r[i].no_wind_error for r in runs)
        print(f"{row.kind:12s}{wind:12.4f}{calm:14.4f}")


if __name__ == "__main__":
    main()
