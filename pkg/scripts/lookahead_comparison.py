"""Compare the logistic and literal look-ahead formulas.

Prints ld over speed for both readings and the normal-road success of the
pure pursuit trackers under each.

    python scripts/lookahead_comparison.py
"""

from dataclasses import replace

from hybrid_tracker.scenarios import NORMAL, build_scenario
from hybrid_tracker.sim import SimConfig, simulate
from hybrid_tracker.trackers import GPS_PID, VISION_PID, PurePursuitParams, lookahead_distance


def main():
    readings = ("logistic", "literal")
    print(f"{'v km/h':>7}" + "".join(f"{r:>12}" for r in readings))
    for v in (0, 10, 20, 30, 50, 80, 100):
        row = [lookahead_distance(v, PurePursuitParams(lookahead_formula=r)) for r in readings]
        print(f"{v:7d}" + "".join(f"{ld:12.1f}" for ld in row))
    print()
    for reading in readings:
        cfg = SimConfig(
            pp_vision=replace(PurePursuitParams(pid=VISION_PID), lookahead_formula=reading),
            pp_gps=replace(PurePursuitParams(pid=GPS_PID), lookahead_formula=reading))
        marks = []
        for name in NORMAL + ("straight_highspeed",):
            for choice in ("pp-vision", "pp-gps"):
                ok = simulate(build_scenario(name), choice, cfg).success
                marks.append(f"{name}/{choice}:{'O' if ok else 'X'}")
        print(f"{reading}: " + " ".join(marks))


if __name__ == "__main__":
    main()
