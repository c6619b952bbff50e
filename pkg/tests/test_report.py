import json
import math
from fractions import Fraction

import pytest

from websift.attribution import EntityKey, Granularity
from websift.filters import Label, RuleSet, parse_filter_list
from websift.pipeline import label_records
from websift.psl import PublicSuffixList
from websift.report import (
    histogram,
    percent_display,
    request_table_from_counts,
    summary_json_obj,
    summary_tables,
    write_reports,
)
from websift.sift import EntityStats, Verdict, sift
from websift.synth import canonical_scenario, generate

# Published measurement-scale per-level request counts used as a fixed
# oracle for the table arithmetic.
LARGE_COUNTS = [
    ("domain", 755_784, 566_810, 1_129_109),
    ("hostname", 161_604, 106_542, 860_963),
    ("script", 235_157, 490_295, 135_511),
    ("method", 23_819, 74_223, 37_469),
]


class TestRequestTable:
    def test_large_scale_separation_percents(self):
        rows = request_table_from_counts(LARGE_COUNTS)
        assert [percent_display(r.separation) for r in rows] == [54, 24, 84, 72]

    def test_large_scale_cumulative_percents(self):
        rows = request_table_from_counts(LARGE_COUNTS)
        assert [percent_display(r.cumulative) for r in rows] == [54, 65, 94, 98]

    def test_exact_fractions_retained(self):
        rows = request_table_from_counts(LARGE_COUNTS)
        total = sum(LARGE_COUNTS[0][1:4])
        assert rows[0].separation == Fraction(755_784 + 566_810, total)
        assert rows[-1].cumulative == Fraction(
            sum(t + f for _, t, f, _ in LARGE_COUNTS), total
        )

    def test_empty_input(self):
        assert request_table_from_counts([]) == []

    def test_zero_total_yields_none(self):
        rows = request_table_from_counts([("domain", 0, 0, 0)])
        assert rows[0].separation is None and rows[0].cumulative is None


class TestPercentDisplay:
    def test_half_up_rounding(self):
        assert percent_display(Fraction(1, 200)) == 1  # 0.5% rounds up
        assert percent_display(Fraction(985, 1000)) == 99  # 98.5 -> 99
        assert percent_display(Fraction(49, 100)) == 49

    def test_none_passthrough(self):
        assert percent_display(None) is None


def _stat(ratio, key="k"):
    return EntityStats(
        key=EntityKey(Granularity.DOMAIN, key),
        tracking_count=1,
        functional_count=1,
        ratio=ratio,
        verdict=Verdict.MIXED,
    )


class TestHistogram:
    def test_zero_ratio_lands_in_zero_bin(self):
        h = histogram([_stat(0.0)], bin_width=0.25)
        assert h.bins == [(0.0, 1)]

    def test_infinities_go_to_sentinels(self):
        h = histogram([_stat(math.inf), _stat(-math.inf), _stat(0.5)])
        assert h.pos_inf == 1 and h.neg_inf == 1
        assert sum(c for _, c in h.bins) == 1

    def test_boundary_value_starts_new_bin(self):
        h = histogram([_stat(1.9, "a"), _stat(2.0, "b")], bin_width=1.0)
        assert h.bins == [(1.0, 1), (2.0, 1)]

    def test_negative_ratios(self):
        h = histogram([_stat(-0.1)], bin_width=0.25)
        assert h.bins == [(-0.25, 1)]

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            histogram([], bin_width=0)


def _canonical_result():
    records, filters_text, psl_text, _ = generate(canonical_scenario(), seed=1)
    psl = PublicSuffixList.from_text(psl_text)
    rules, _ = parse_filter_list(filters_text.splitlines(), "s")
    labeled = label_records(records, RuleSet(rules), psl).labeled
    return sift(labeled, 2.0, psl)


class TestSummaryOutputs:
    def test_json_and_csv_agree(self, tmp_path):
        result = _canonical_result()
        out = tmp_path / "out"
        write_reports(result, str(out), provenance={})
        obj = json.loads((out / "summary.json").read_text())
        csv_lines = (out / "requests_table.csv").read_text().splitlines()
        for row, line in zip(obj["requests_table"], csv_lines[1:]):
            cells = line.split(",")
            assert cells[0] == row["level"]
            assert [int(c) for c in cells[1:4]] == [
                row["tracking"], row["functional"], row["mixed"]
            ]
            assert cells[4] == str(row["separation_percent"])

    def test_method_key_split_in_json(self):
        result = _canonical_result()
        obj = summary_json_obj(result, provenance={})
        method_level = obj["levels"][-1]
        assert method_level["level"] == "method"
        assert all(
            "script_url" in e and "method_name" in e for e in method_level["entities"]
        )

    def test_histogram_files_per_level(self, tmp_path):
        result = _canonical_result()
        out = tmp_path / "o"
        write_reports(result, str(out), provenance={})
        for name in ("domain", "hostname", "script", "method"):
            lines = (out / f"histogram_{name}.csv").read_text().splitlines()
            assert lines[0] == "bin_lower_edge,count"
            assert lines[1].startswith("-inf,") and lines[-1].startswith("+inf,")

    def test_empty_result_tables_show_na(self, psl):
        result = sift([], 2.0, psl)
        rows, entity_rows = summary_tables(result)
        assert all(r.separation is None for r in rows)
        assert all(r.separation is None for r in entity_rows)

    def test_deterministic_serialization(self, tmp_path):
        result = _canonical_result()
        a, b = tmp_path / "a", tmp_path / "b"
        write_reports(result, str(a), provenance={"x": 1})
        write_reports(result, str(b), provenance={"x": 1})
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
