"""Run the scenario x tracker success matrix in parallel and save a JSON report.

    python scripts/run_matrix.py [--out results] [--jobs 4]
"""

import argparse
import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from hybrid_tracker.cli import expected_success
from hybrid_tracker.metrics import compute_metrics
from hybrid_tracker.scenarios import SCENARIOS, build_scenario
from hybrid_tracker.sim import CHOICES, SimConfig, simulate


def run_cell(cell):
    name, choice = cell
    scn = build_scenario(name)
    cfg = SimConfig()
    log = simulate(scn, choice, cfg)
    m = compute_metrics(log, scn, cfg.vehicle)
    return {"scenario": name, "tracker": choice, **m.to_dict(),
            "expected_success": expected_success(name, choice)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()
    cells = [(n, c) for n in SCENARIOS for c in CHOICES]
    t0 = time.perf_counter()
    with ProcessPoolExecutor(args.jobs) as pool:
        report = list(pool.map(run_cell, cells))
    elapsed = time.perf_counter() - t0
    print(f"{'scenario':<13}" + "".join(f"{c:>13}" for c in CHOICES))
    for name in SCENARIOS:
        row = [r for r in report if r["scenario"] == name]
        print(f"{name:<13}" + "".join(f"{'O' if r['success'] else 'X':>13}" for r in row))
    print(f"\n{'scenario':<13} {'tracker':<12} {'lat':>7} {'lon':>7} {'dist':>7} {'yaw':>7} {'steer':>7}")
    for r in report:
        print(f"{r['scenario']:<13} {r['tracker']:<12} {r['rmse_lateral']:7.3f} "
              f"{r['rmse_longitudinal']:7.3f} {r['distance']:7.3f} {r['rmse_yaw']:7.3f} "
              f"{r['rmse_steer']:7.3f}")
    bad = [r for r in report if r["success"] != r["expected_success"]]
    print(f"\n{len(cells)} cells in {elapsed:.1f} s, {len(bad)} deviating from the expected pattern")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "matrix.json").write_text(json.dumps(report, indent=2) + "\n")


if __name__ == "__main__":
    main()
