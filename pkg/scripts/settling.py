"""Straight-road transients: recovery from a steering perturbation and from a lateral offset.

    python scripts/settling.py [--speed 20]
"""

import argparse

import numpy as np

from hybrid_tracker.metrics import error_components
from hybrid_tracker.scenarios import build_scenario
from hybrid_tracker.sim import initial_state, simulate


def settle_time(t, values, threshold):
    above = np.flatnonzero(np.abs(values) >= threshold)
    if len(above) == 0:
        return 0.0
    if above[-1] == len(values) - 1:
        return float("inf")
    return float(t[above[-1] + 1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speed", type=float, default=20.0, help="km/h")
    ap.add_argument("--perturbation", type=float, default=2.0, help="initial steer, degrees")
    ap.add_argument("--offset", type=float, default=1.0, help="initial lateral offset, metres")
    args = ap.parse_args()

    scn = build_scenario("straight", args.speed)
    scn.duration = min(scn.duration, 20.0)
    print(f"steering perturbation {args.perturbation} deg at {args.speed} km/h")
    for choice in ("pp-vision", "pp-gps", "stanley-gps"):
        log = simulate(scn, choice, initial_steer=args.perturbation)
        ts = settle_time(log.column("t"), log.column("steer_cmd"), 0.5)
        print(f"  {choice:<12} |steer| < 0.5 deg after {ts:6.2f} s")

    print(f"\nlateral offset {args.offset} m at {args.speed} km/h")
    for choice in ("pp-vision", "pp-gps", "stanley-gps", "hybrid"):
        log = simulate(scn, choice, state=initial_state(scn, lateral=args.offset))
        xy = np.column_stack([log.column("x"), log.column("y")])
        _, _, lat = error_components(xy, scn.ideal_path.xy, scn.ideal_path.yaw)
        ts = settle_time(log.column("t"), lat, 0.1)
        # overshoot is excursion to the far side of the path
        over = max(0.0, float(-lat.min() if args.offset > 0 else lat.max()))
        print(f"  {choice:<12} |e| < 0.1 m after {ts:6.2f} s, overshoot {over:.3f} m")


if __name__ == "__main__":
    main()
