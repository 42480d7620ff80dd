"""Time a 12-storm, 48-hour ensemble on a 200 x 200 polar basin."""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from test_acceptance import _bench_basin, _bench_storms  # noqa: E402

from surgerisk.surge_sim import SimConfig, compute_mom, run_storm_meow  # noqa: E402
from surgerisk.surge_sim.solver import time_step  # noqa: E402
from surgerisk.units import FT  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--storms", type=int, default=12)
    ap.add_argument("--hours", type=float, default=48.0)
    args = ap.parse_args()

    basin = _bench_basin()
    cfg = SimConfig(duration_h=args.hours)
    dt, _ = time_step(basin, 2.0 * FT, cfg)
    storms = _bench_storms(basin, args.storms)
    run_storm_meow(basin, storms[0], SimConfig(duration_h=1.0))
    times, meows = [], []
    for s in storms:
        t0 = time.perf_counter()
        meows.append(run_storm_meow(basin, s, cfg))
        times.append(time.perf_counter() - t0)
        print(f"{s.storm_id}: cat {s.category}, dP {s.pressure_deficit:.0f} mb, {times[-1]:.2f} s")
    steps = args.hours * 3600 / dt
    print(f"grid {basin.shape}, dt {dt:.1f} s, ~{steps:.0f} steps/storm")
    print(f"total {sum(times):.1f} s, {1e9 * sum(times) / (steps * basin.n_cells * len(storms)):.1f} ns/cell-step")
    for cat in sorted({m.category for m in meows}):
        mom = compute_mom([m for m in meows if m.category == cat])
        above = (mom.values - np.maximum(basin.cell_elevation, 0.0)) / FT
        print(f"cat {cat} MOM: max {above.max():.1f} ft above ground, {(above >= 5).sum()} cells >= 5 ft")


if __name__ == "__main__":
    main()
