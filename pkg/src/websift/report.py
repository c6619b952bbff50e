"""Machine-readable result emission: summary tables, histograms,
sweep data, and divergence findings.

Percentages are rounded half-up for display columns only; JSON keeps
the exact integer counts and exact fractions alongside.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .attribution import EntityKey, Granularity
from .sift import EntityStats, SiftResult, SweepPoint, Verdict

TOOL_VERSION = "0.1.0"


def percent_display(frac: Optional[Fraction]) -> Optional[int]:
    """Fraction -> whole percent, rounded half-up."""
    if frac is None:
        return None
    return int(
        (Decimal(frac.numerator) * 100 / Decimal(frac.denominator)).quantize(
            Decimal("1"), rounding=ROUND_HALF_UP
        )
    )


def _frac_obj(frac: Optional[Fraction]) -> Optional[dict]:
    if frac is None:
        return None
    return {
        "numerator": frac.numerator,
        "denominator": frac.denominator,
        "value": float(frac),
    }


@dataclass(frozen=True)
class RequestRow:
    level: str
    tracking: int
    functional: int
    mixed: int
    separation: Optional[Fraction]
    cumulative: Optional[Fraction]


@dataclass(frozen=True)
class EntityRow:
    level: str
    tracking: int
    functional: int
    mixed: int
    separation: Optional[Fraction]  # fraction of entities that are pure


def request_table_from_counts(
    rows: Sequence[tuple[str, int, int, int]]
) -> list[RequestRow]:
    """Build the request-level table from per-level (tracking,
    functional, mixed) request counts.  Requests entering a level are
    that row's sum; the grand total is the first level's sum."""
    out: list[RequestRow] = []
    total = sum(rows[0][1:4]) if rows else 0
    attributed = 0
    for level, t, f, m in rows:
        entering = t + f + m
        attributed += t + f
        separation = Fraction(t + f, entering) if entering else None
        cumulative = Fraction(attributed, total) if total else None
        out.append(RequestRow(level, t, f, m, separation, cumulative))
    return out


def summary_tables(result: SiftResult) -> tuple[list[RequestRow], list[EntityRow]]:
    """Request-level and entity-level tables for a completed sift."""
    request_rows = request_table_from_counts(
        [
            (
                lvl.granularity.value,
                lvl.tracking_requests,
                lvl.functional_requests,
                lvl.mixed_requests,
            )
            for lvl in result.levels
        ]
    )
    entity_rows = []
    for lvl in result.levels:
        t = sum(1 for e in lvl.entities if e.verdict == Verdict.TRACKING)
        f = sum(1 for e in lvl.entities if e.verdict == Verdict.FUNCTIONAL)
        m = sum(1 for e in lvl.entities if e.verdict == Verdict.MIXED)
        n = t + f + m
        entity_rows.append(
            EntityRow(
                lvl.granularity.value, t, f, m, Fraction(t + f, n) if n else None
            )
        )
    return request_rows, entity_rows


@dataclass(frozen=True)
class Histogram:
    bin_width: float
    bins: list[tuple[float, int]]  # (lower edge, count), finite ratios only
    pos_inf: int
    neg_inf: int


def histogram(stats: Sequence[EntityStats], bin_width: float = 0.25) -> Histogram:
    """Bin finite ratios into [k*w, (k+1)*w); infinite ratios go to two
    sentinel overflow bins."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    counts: dict[int, int] = {}
    pos_inf = neg_inf = 0
    for e in stats:
        if e.ratio == math.inf:
            pos_inf += 1
        elif e.ratio == -math.inf:
            neg_inf += 1
        else:
            k = math.floor(e.ratio / bin_width)
            counts[k] = counts.get(k, 0) + 1
    bins = [(k * bin_width, counts[k]) for k in sorted(counts)]
    return Histogram(bin_width=bin_width, bins=bins, pos_inf=pos_inf, neg_inf=neg_inf)


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _key_obj(key: EntityKey) -> dict:
    if key.granularity == Granularity.METHOD:
        script_url, method = key.key
        return {"script_url": script_url, "method_name": method}
    return {"key": key.key}


def _entity_obj(e: EntityStats) -> dict:
    return {
        **_key_obj(e.key),
        "tracking_count": e.tracking_count,
        "functional_count": e.functional_count,
        "ratio": _json_ratio(e.ratio),
        "verdict": e.verdict.value,
    }


def _json_ratio(r: float):
    if r == math.inf:
        return "+inf"
    if r == -math.inf:
        return "-inf"
    return r


def summary_json_obj(
    result: SiftResult,
    provenance: dict,
) -> dict:
    request_rows, entity_rows = summary_tables(result)
    return {
        "tool_version": TOOL_VERSION,
        "provenance": provenance,
        "threshold": result.tau,
        "total_requests": result.total_requests,
        "requests_table": [
            {
                "level": r.level,
                "tracking": r.tracking,
                "functional": r.functional,
                "mixed": r.mixed,
                "separation_factor": _frac_obj(r.separation),
                "separation_percent": percent_display(r.separation),
                "cumulative_separation_factor": _frac_obj(r.cumulative),
                "cumulative_percent": percent_display(r.cumulative),
            }
            for r in request_rows
        ],
        "entities_table": [
            {
                "level": r.level,
                "tracking": r.tracking,
                "functional": r.functional,
                "mixed": r.mixed,
                "separation_factor": _frac_obj(r.separation),
                "separation_percent": percent_display(r.separation),
            }
            for r in entity_rows
        ],
        "levels": [
            {
                "level": lvl.granularity.value,
                "entering": lvl.entering,
                "entities": [_entity_obj(e) for e in lvl.entities],
            }
            for lvl in result.levels
        ],
        "residual_request_ids": result.residual_ids,
        "diagnostics": [
            {"request_id": d.request_id, "reason": d.reason} for d in result.diagnostics
        ],
    }


def _dump_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _na(value: Optional[int]) -> str:
    return "n/a" if value is None else str(value)


def write_reports(
    result: SiftResult,
    out_dir: str,
    provenance: dict,
    histogram_bin_width: float = 0.25,
    sweep_points: Optional[Sequence[SweepPoint]] = None,
    sweep_level: Optional[str] = None,
    divergence: Optional[list] = None,
) -> None:
    """Write the full output-directory layout."""
    os.makedirs(out_dir, exist_ok=True)
    _dump_json(summary_json_obj(result, provenance), os.path.join(out_dir, "summary.json"))

    request_rows, entity_rows = summary_tables(result)
    with open(os.path.join(out_dir, "requests_table.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["level", "tracking", "functional", "mixed", "separation_percent", "cumulative_percent"]
        )
        for r in request_rows:
            w.writerow(
                [r.level, r.tracking, r.functional, r.mixed,
                 _na(percent_display(r.separation)), _na(percent_display(r.cumulative))]
            )
    with open(os.path.join(out_dir, "entities_table.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "tracking", "functional", "mixed", "separation_percent"])
        for r in entity_rows:
            w.writerow(
                [r.level, r.tracking, r.functional, r.mixed, _na(percent_display(r.separation))]
            )

    for lvl in result.levels:
        h = histogram(lvl.entities, histogram_bin_width)
        path = os.path.join(out_dir, f"histogram_{lvl.granularity.value}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_lower_edge", "count"])
            w.writerow(["-inf", h.neg_inf])
            for edge, count in h.bins:
                w.writerow([edge, count])
            w.writerow(["+inf", h.pos_inf])

    if sweep_points is not None:
        with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "level", "mixed_entities", "total_entities", "percent_mixed"])
            for p in sweep_points:
                pct = "" if p.percent_mixed is None else f"{p.percent_mixed:.6f}"
                w.writerow([p.tau, sweep_level, p.mixed_entities, p.total_entities, pct])

    if divergence is not None:
        _dump_json({"mixed_methods": divergence}, os.path.join(out_dir, "divergence.json"))
