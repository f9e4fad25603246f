"""Sweep the vision pure pursuit PID filter gains.

Scales (kp, ki) together from a base triple and reports junction success,
offset convergence and straight-road steering RMSE for each scale.

    python scripts/gain_sweep.py [--base 1.05 0.1 0.03] [--scales 1 2 3 5]
"""

import argparse
from dataclasses import replace

import numpy as np

from hybrid_tracker.metrics import error_components
from hybrid_tracker.scenarios import build_scenario
from hybrid_tracker.sim import SimConfig, initial_state, simulate
from hybrid_tracker.trackers import PidGains, PurePursuitParams


def evaluate(gains: PidGains) -> dict:
    cfg = SimConfig(pp_vision=replace(PurePursuitParams(), pid=gains))
    junctions = simulate(build_scenario("junctions"), "pp-vision", cfg).success
    scn = build_scenario("straight")
    scn.duration = 20.0
    log = simulate(scn, "pp-vision", cfg, state=initial_state(scn, lateral=1.0))
    xy = np.column_stack([log.column("x"), log.column("y")])
    _, _, lat = error_components(xy, scn.ideal_path.xy, scn.ideal_path.yaw)
    late = lat[log.column("t") > 10.0]
    return {"junctions": junctions, "overshoot": max(0.0, float(-lat.min())),
            "residual": float(np.abs(late).max()) if len(late) else float("nan")}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base", type=float, nargs=3, default=(1.05, 0.1, 0.03))
    ap.add_argument("--scales", type=float, nargs="+", default=(1, 2, 3, 5, 8))
    args = ap.parse_args()
    kp, ki, kd = args.base
    print(f"{'kp':>6} {'ki':>6} {'kd':>6}  junctions  overshoot  |e| after 10 s")
    for s in args.scales:
        g = PidGains(kp * s, ki * s, kd)
        r = evaluate(g)
        print(f"{g.kp:6.2f} {g.ki:6.2f} {g.kd:6.2f}  {'O' if r['junctions'] else 'X':>9}  "
              f"{r['overshoot']:8.3f} m  {r['residual']:10.3f} m")


if __name__ == "__main__":
    main()
