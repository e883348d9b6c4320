#!/usr/bin/env python3
"""Run every theorem-level scenario and dump the JSON reports."""
import argparse
import json
import sys

import numpy as np

from mconvex import harness as hz


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="write all reports to one JSON file")
    args = ap.parse_args()

    runs = {
        "theorem1": lambda: hz.scenario_theorem1(hz.ScenarioConfig(seed=args.seed)),
        "theorem3": lambda: hz.scenario_theorem3(hz.ScenarioConfig(seed=args.seed)),
        "theorem4": lambda: hz.scenario_theorem4(hz.ScenarioConfig(seed=args.seed)),
        "theorem5": lambda: hz.scenario_theorem5(hz.ScenarioConfig(h=1.0, seed=args.seed)),
        "theorem6": lambda: hz.scenario_theorem6(hz.ScenarioConfig(h=1.0, seed=args.seed)),
    }
    reports = {}
    failures = 0
    for name, run in runs.items():
        report = run()
        reports[name] = report
        print(f"{name}: {report['status']}")
        failures += report["status"] != "passed"
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(reports, fh, indent=2, sort_keys=True,
                      default=lambda o: o.tolist() if isinstance(o, np.ndarray) else float(o))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
