"""Command-line interface.

Subcommands: classify (full pipeline + reports), sweep (threshold
sensitivity), diverge (call-graph divergence for mixed methods), label
(per-request labels to stdout), synth (fixture generation).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import pipeline, report, synth
from .attribution import Granularity
from .psl import PublicSuffixList
from .sift import DEFAULT_THRESHOLD, sift, sweep, threshold_grid
from .trace import Diagnostic, TraceIOError, parse_trace_file

EXIT_OK = 0
EXIT_FATAL = 2


class FatalInputError(Exception):
    pass


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--traces", nargs="+", required=True, help="JSON-lines trace file(s)")
    p.add_argument("--filters", nargs="+", required=True, help="filter list file(s), unioned")
    p.add_argument("--psl", required=True, help="public suffix list snapshot file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="websift",
        description="Classify web requests into tracking/functional/mixed resources "
        "at domain, hostname, script, and method granularity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="full sift + report output directory")
    _add_input_args(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--positional-identity", action="store_true",
                   help="distinguish anonymous methods by line:column")
    p.add_argument("--histogram-bin-width", type=float, default=0.25)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="threshold sensitivity sweep")
    _add_input_args(p)
    p.add_argument("--grid", default="1.0:3.0:0.1", help="start:stop:step, endpoints inclusive")
    p.add_argument("--level", default="script",
                   choices=[g.value for g in Granularity])
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="base threshold fixing the hierarchy structure")
    p.add_argument("--positional-identity", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("diverge", help="divergence analysis for all mixed methods")
    _add_input_args(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--positional-identity", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("label", help="per-request labels to stdout (one JSON per line)")
    _add_input_args(p)

    p = sub.add_parser("synth", help="generate synthetic fixtures with planted ground truth")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def _load_inputs(args):
    for path in [*args.traces, *args.filters, args.psl]:
        if not os.path.exists(path):
            raise FatalInputError(f"input file not found: {path}")
    try:
        psl = PublicSuffixList.from_file(args.psl)
    except OSError as exc:
        raise FatalInputError(f"unreadable PSL file: {exc}")
    rules, rule_diags = pipeline.load_filter_lists(args.filters)
    records = []
    trace_diags: list[Diagnostic] = []
    for path in args.traces:
        try:
            recs, diags = parse_trace_file(path)
        except TraceIOError as exc:
            raise FatalInputError(str(exc))
        records.extend(recs)
        trace_diags.extend(diags)
    labeling = pipeline.label_records(records, rules, psl)
    return psl, rules, records, labeling, rule_diags, trace_diags


def _provenance(args) -> dict:
    prov = {
        "traces": {p: report.file_sha256(p) for p in args.traces},
        "filter_lists": {p: report.file_sha256(p) for p in args.filters},
        "psl": {args.psl: report.file_sha256(args.psl)},
    }
    if hasattr(args, "threshold"):
        prov["threshold"] = args.threshold
    return prov


def _write_diagnostics(out_dir, labeling, rule_diags, trace_diags, request_diags=()):
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    lines += [f"trace: {d}" for d in trace_diags]
    lines += [f"rule: {d}" for d in rule_diags]
    lines += [f"excluded (not script-initiated): {rid}" for rid in labeling.non_script_initiated]
    lines += [f"unlabelable: {rid}: {reason}" for rid, reason in labeling.unlabelable]
    lines += [f"request: {d.request_id}: {d.reason}" for d in request_diags]
    with open(os.path.join(out_dir, "diagnostics.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    for line in lines:
        print(line, file=sys.stderr)


def _cmd_classify(args) -> int:
    psl, rules, records, labeling, rule_diags, trace_diags = _load_inputs(args)
    result = sift(labeling.labeled, args.threshold, psl, args.positional_identity)
    findings = pipeline.divergence_findings(
        labeling.labeled, result, args.positional_identity
    )
    report.write_reports(
        result,
        args.out,
        provenance=_provenance(args),
        histogram_bin_width=args.histogram_bin_width,
        divergence=findings,
    )
    _write_diagnostics(args.out, labeling, rule_diags, trace_diags, result.diagnostics)
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise FatalInputError(f"bad grid {text!r}, expected start:stop:step")
    try:
        return threshold_grid(start, stop, step)
    except ValueError as exc:
        raise FatalInputError(str(exc))


def _cmd_sweep(args) -> int:
    psl, rules, records, labeling, rule_diags, trace_diags = _load_inputs(args)
    grid = _parse_grid(args.grid)
    level = Granularity(args.level)
    points = sweep(
        labeling.labeled, grid, level, psl,
        base_tau=args.threshold, positional_identity=args.positional_identity,
    )
    result = sift(labeling.labeled, args.threshold, psl, args.positional_identity)
    report.write_reports(
        result, args.out, provenance=_provenance(args),
        sweep_points=points, sweep_level=level.value,
    )
    _write_diagnostics(args.out, labeling, rule_diags, trace_diags, result.diagnostics)
    return EXIT_OK


def _cmd_diverge(args) -> int:
    psl, rules, records, labeling, rule_diags, trace_diags = _load_inputs(args)
    result = sift(labeling.labeled, args.threshold, psl, args.positional_identity)
    findings = pipeline.divergence_findings(
        labeling.labeled, result, args.positional_identity
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "divergence.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"provenance": _provenance(args), "mixed_methods": findings},
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    _write_diagnostics(args.out, labeling, rule_diags, trace_diags, result.diagnostics)
    return EXIT_OK


def _cmd_label(args) -> int:
    psl, rules, records, labeling, rule_diags, trace_diags = _load_inputs(args)
    for rec, label in labeling.labeled:
        print(json.dumps(
            {"request_id": rec.request_id, "url": rec.url, "label": label.value},
            sort_keys=True,
        ))
    for line in (str(d) for d in [*trace_diags, *rule_diags]):
        print(line, file=sys.stderr)
    return EXIT_OK


def _cmd_synth(args) -> int:
    try:
        scenario = synth.load_scenario(args.scenario)
    except (OSError, KeyError, ValueError) as exc:
        raise FatalInputError(f"cannot load scenario: {exc}")
    try:
        synth.write_fixture(scenario, args.seed, args.out)
    except synth.ScenarioError as exc:
        raise FatalInputError(str(exc))
    return EXIT_OK


_COMMANDS = {
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
    "diverge": _cmd_diverge,
    "label": _cmd_label,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FatalInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
