"""Robust planner vs nominal padded baseline over a seed sweep.

For each seed the scenario is solved twice: once with the full particle
reach sets and once with the single-particle baseline padded by the
scenario's baseline_padding.  Every solved plan is then Monte-Carlo
validated with fresh rollouts.

  python3 scripts/compare_methods.py --scenario scenarios/quadrotor.json
  python3 scripts/compare_methods.py --scenario scenarios/jumper.json --seeds 5
"""

import argparse
import json
import time
from dataclasses import replace

from reachrrt.planner import plan
from reachrrt.scenario import load_scenario
from reachrrt.validation import monte_carlo_validate


def run_one(sc, sys_, seed, baseline):
    params = replace(sc.params, seed=seed)
    if baseline:
        params = replace(params, baseline=True, n_particles=1,
                         epsilon=sc.baseline_padding)
    t0 = time.time()
    result = plan(sys_, sc.init_region, sc.goal, sc.obstacles,
                  sc.sampling_box, params, init_mode=sc.init_mode)
    row = {
        "seed": seed,
        "method": "baseline" if baseline else "reach-set",
        "solved": result.solved,
        "iterations": result.stats.iterations,
        "plan_time": round(time.time() - t0, 2),
    }
    if result.solved:
        rec = monte_carlo_validate(sys_, result.plan, sc.init_region, sc.goal,
                                   sc.obstacles, sc.validation_rollouts,
                                   sc.validation_seed, init_mode=sc.init_mode)
        row.update(valid=rec.valid, collisions=rec.collisions,
                   goal_misses=rec.goal_misses,
                   worst_clearance=round(rec.worst_clearance, 4))
    else:
        row.update(valid=False, collisions=None, goal_misses=None,
                   worst_clearance=None)
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", required=True)
    ap.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1")
    ap.add_argument("--json", help="optional path for the raw rows")
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    sys_ = sc.build_system()
    rows = []
    for baseline in (False, True):
        label = "baseline" if baseline else "reach-set"
        n_valid = 0
        for seed in range(args.seeds):
            row = run_one(sc, sys_, seed, baseline)
            rows.append(row)
            n_valid += row["valid"]
            status = "valid" if row["valid"] else (
                "INVALID" if row["solved"] else "UNSOLVED")
            detail = "" if not row["solved"] else (
                f" coll={row['collisions']} miss={row['goal_misses']}"
                f" clear={row['worst_clearance']}")
            print(f"{label:9s} seed {seed}: {status:8s} "
                  f"iters={row['iterations']}{detail}")
        print(f"{label:9s} valid {n_valid}/{args.seeds}\n")

    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2, sort_keys=True)
        print(f"rows -> {args.json}")


if __name__ == "__main__":
    main()
