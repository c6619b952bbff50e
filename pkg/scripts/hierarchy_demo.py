#!/usr/bin/env python3
"""Run the canonical pure/mixed hierarchy end to end and print the
per-level tables.

Usage: python3 scripts/hierarchy_demo.py [--threshold 2.0] [--seed 0]
"""

import argparse

from websift.filters import RuleSet, parse_filter_list
from websift.pipeline import label_records
from websift.psl import PublicSuffixList
from websift.report import percent_display, summary_tables
from websift.sift import sift
from websift.synth import canonical_scenario, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--threshold", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    records, filters_text, psl_text, _ = generate(canonical_scenario(), seed=args.seed)
    psl = PublicSuffixList.from_text(psl_text)
    rules, _ = parse_filter_list(filters_text.splitlines(), "synthetic")
    labeled = label_records(records, RuleSet(rules), psl).labeled
    result = sift(labeled, args.threshold, psl)

    request_rows, _ = summary_tables(result)
    print(f"{'level':<10} {'track':>6} {'func':>6} {'mixed':>6} {'sep%':>5} {'cum%':>5}")
    for row in request_rows:
        sep = percent_display(row.separation)
        cum = percent_display(row.cumulative)
        print(f"{row.level:<10} {row.tracking:>6} {row.functional:>6} "
              f"{row.mixed:>6} {sep!s:>5} {cum!s:>5}")

    print()
    for lvl in result.levels:
        print(f"-- {lvl.granularity.value} --")
        for e in lvl.entities:
            print(f"  {e.key.as_text():<45} t={e.tracking_count:<3} "
                  f"f={e.functional_count:<3} -> {e.verdict.value}")
    print(f"\nresidual requests: {len(result.residual_ids)}")


if __name__ == "__main__":
    main()
