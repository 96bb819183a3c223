"""Planner success rate as a function of the iteration budget.

Runs the scenario's planner over a seed sweep at each budget and reports
the solved fraction.  The same seed list is reused across budgets, so the
curve is nondecreasing by construction.

  python3 scripts/budget_study.py --scenario scenarios/corridor.json
  python3 scripts/budget_study.py --scenario scenarios/quadrotor.json \
      --budgets 500 2000 8000 --repeats 20
"""

import argparse
import json
import time

from reachrrt.scenario import load_scenario
from reachrrt.validation import success_rate_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", required=True)
    ap.add_argument("--budgets", type=int, nargs="+",
                    default=[500, 2000, 8000])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--json", help="optional path for the raw rows")
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    sys_ = sc.build_system()
    t0 = time.time()
    rows = success_rate_study(sys_, sc.init_region, sc.goal, sc.obstacles,
                              sc.sampling_box, sc.params,
                              budgets=args.budgets, repeats=args.repeats,
                              init_mode=sc.init_mode)
    for row in rows:
        print(f"budget {row['budget']:6d}: {row['successes']:3d}/{row['repeats']} "
              f"solved  rate {row['rate']:.2f}")
    print(f"({time.time() - t0:.0f}s)")

    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=2, sort_keys=True)
        print(f"rows -> {args.json}")


if __name__ == "__main__":
    main()
