"""End-to-end glue: load inputs, label requests, sift, analyze divergence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .attribution import EntityKey, Granularity
from .divergence import build_call_graph, points_of_divergence
from .filters import RequestContext, RuleDiagnostic, RuleSet, parse_filter_list
from .psl import PublicSuffixList, UrlError, decompose_url
from .sift import LabeledRecord, SiftResult, Verdict
from .trace import RequestRecord


@dataclass
class LabelingResult:
    labeled: list[LabeledRecord]
    non_script_initiated: list[str]  # request_ids excluded from classification
    unlabelable: list[tuple[str, str]]  # (request_id, reason)


def load_filter_lists(paths: Sequence[str]) -> tuple[RuleSet, list[RuleDiagnostic]]:
    rules = []
    diagnostics: list[RuleDiagnostic] = []
    for path in paths:
        with open(path, "rb") as fh:
            parsed, diags = parse_filter_list(fh, path)
        rules.extend(parsed)
        diagnostics.extend(diags)
    return RuleSet(rules), diagnostics


def page_domain_of(url: str, psl: PublicSuffixList) -> str:
    try:
        return decompose_url(url, psl).registrable_domain
    except UrlError:
        return ""


def label_records(
    records: Sequence[RequestRecord], rules: RuleSet, psl: PublicSuffixList
) -> LabelingResult:
    """Label every script-initiated record Tracking/Functional.

    Records with an empty call stack are excluded (they cannot be
    attributed to code); records whose URL has no host cannot be
    matched or grouped and are reported unlabelable.
    """
    labeled: list[LabeledRecord] = []
    non_script: list[str] = []
    unlabelable: list[tuple[str, str]] = []
    page_cache: dict[str, str] = {}
    for rec in records:
        if not rec.script_initiated:
            non_script.append(rec.request_id)
            continue
        try:
            url_parts = decompose_url(rec.url, psl)
        except UrlError as exc:
            unlabelable.append((rec.request_id, str(exc)))
            continue
        if rec.top_level_url not in page_cache:
            page_cache[rec.top_level_url] = page_domain_of(rec.top_level_url, psl)
        ctx = RequestContext(
            url_parts=url_parts,
            page_registrable_domain=page_cache[rec.top_level_url],
            resource_type=rec.resource_type,
        )
        labeled.append((rec, rules.label(ctx)))
    return LabelingResult(labeled=labeled, non_script_initiated=non_script, unlabelable=unlabelable)


def divergence_findings(
    labeled: Sequence[LabeledRecord],
    result: SiftResult,
    positional_identity: bool = False,
) -> list[dict]:
    """Per mixed method: merged call-graph divergence nodes, in order."""
    method_level = result.levels[-1]
    assert method_level.granularity == Granularity.METHOD
    mixed_keys = {e.key for e in method_level.entities if e.verdict == Verdict.MIXED}
    stacks_by_key: dict[EntityKey, list] = {k: [] for k in mixed_keys}
    by_id = {rec.request_id: (rec, label) for rec, label in labeled}
    for request_id, key in method_level.attribution.items():
        if key in stacks_by_key:
            rec, label = by_id[request_id]
            stacks_by_key[key].append((label, rec.call_stack))
    findings = []
    for key in sorted(mixed_keys, key=lambda k: k.as_text()):
        graph = build_call_graph(stacks_by_key[key], positional_identity)
        nodes = points_of_divergence(graph)
        script_url, method_name = key.key
        findings.append(
            {
                "script_url": script_url,
                "method_name": method_name,
                "divergence": [{"script_url": n[0], "method_name": n[1]} for n in nodes],
            }
        )
    return findings
