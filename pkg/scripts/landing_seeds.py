"""Land the default scenario over a range of seeds and tabulate the touchdowns.

    python scripts/landing_seeds.py --seeds 20 --out results/landing_seeds.csv
"""

import argparse
from dataclasses import dataclass, replace
from pathlib import Path

from shipland.config import parse_config
from shipland.environment import next_wave_peak
from shipland.simkit import ScenarioConfig, SimulationDiverged, run_scenario, write_table


@dataclass(frozen=True)
class LandingRow:
    seed: int
    outcome: str
    touchdown_time: float
    horizontal_error: float
    relative_velocity: float
    peak_offset: float


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", type=Path)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", type=Path, default=Path("landing_seeds.csv"))
    args = ap.parse_args()

    base = parse_config(args.scenario) if args.scenario else ScenarioConfig()
    rows = []
    for seed in range(args.seeds):
        try:
            m = run_scenario(replace(base, seed=seed)).metrics
        except SimulationDiverged:
            rows.append(LandingRow(seed, "diverged", *[float("nan")] * 4))
            continue
        offset = float("nan")
        if m.landed:
            offset = m.touchdown_time - next_wave_peak(m.touchdown_time - base.ship.wave_period / 2, base.ship)
        rows.append(LandingRow(seed, m.outcome, m.touchdown_time, m.touchdown_horizontal_error, m.touchdown_relative_velocity, offset))
        print(f"seed {seed:3d} {m.outcome:10s} t={m.touchdown_time:7.2f}s err={m.touchdown_horizontal_error:.3f}m "
              f"vrel={m.touchdown_relative_velocity:.3f}m/s peak_offset={offset:+.3f}s")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_table(args.out, rows)
    landed = sum(r.outcome == "touched_down" for r in rows)
    print(f"{landed}/{len(rows)} landed; table written to {args.out}")


if __name__ == "__main__":
    main()
