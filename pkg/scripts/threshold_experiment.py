#!/usr/bin/env python3
"""Sensitivity of the Mixed share to the classification threshold.

Generates randomized scenarios, sweeps tau over a grid at a fixed
hierarchy structure, and prints the mean percent of entities left
Mixed at each grid point.

Usage: python3 scripts/threshold_experiment.py [--scenarios 30]
       [--grid 1.0:3.0:0.1] [--level script] [--seed 7]
"""

import argparse
import random
import statistics

from websift.attribution import Granularity
from websift.filters import RuleSet, parse_filter_list
from websift.pipeline import label_records
from websift.psl import PublicSuffixList
from websift.sift import sweep, threshold_grid
from websift.synth import generate, random_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=int, default=30)
    ap.add_argument("--grid", default="1.0:3.0:0.1")
    ap.add_argument("--level", default="script", choices=[g.value for g in Granularity])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    start, stop, step = (float(x) for x in args.grid.split(":"))
    grid = threshold_grid(start, stop, step)
    level = Granularity(args.level)
    rng = random.Random(args.seed)

    per_tau: dict[float, list[float]] = {tau: [] for tau in grid}
    for _ in range(args.scenarios):
        scenario = random_scenario(rng)
        records, filters_text, psl_text, _ = generate(scenario, seed=rng.randrange(2**30))
        psl = PublicSuffixList.from_text(psl_text)
        rules, _ = parse_filter_list(filters_text.splitlines(), "synthetic")
        labeled = label_records(records, RuleSet(rules), psl).labeled
        for point in sweep(labeled, grid, level, psl):
            if point.percent_mixed is not None:
                per_tau[point.tau].append(point.percent_mixed)

    print(f"{'tau':>5}  {'mean % mixed':>12}  {'stdev':>7}  n={args.scenarios}")
    for tau in grid:
        values = per_tau[tau]
        mean = statistics.mean(values) if values else float("nan")
        sd = statistics.stdev(values) if len(values) > 1 else 0.0
        print(f"{tau:>5.2f}  {mean:>12.2f}  {sd:>7.2f}")


if __name__ == "__main__":
    main()
