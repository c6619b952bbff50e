"""Brute-force reference classifier used as the sift oracle.

Recomputes every grouping and verdict from scratch with plain dicts,
independently of the package's level machinery.  Only suitable for
small traces.
"""

from __future__ import annotations

import math
from urllib.parse import urlsplit

from websift.filters import Label


def _registrable(host: str, psl) -> str:
    return psl.registrable_domain(host) or host


def _key(rec, level: str, psl, positional_identity: bool = False):
    host = urlsplit(rec.url).hostname.lower().rstrip(".")
    if level == "domain":
        return _registrable(host, psl)
    if level == "hostname":
        return host
    top = rec.call_stack[0]
    if level == "script":
        return top.script_url
    name = top.function_name
    if not name:
        name = "<anonymous>"
        if positional_identity:
            name = f"<anonymous>:{top.line}:{top.column}"
    return (top.script_url, name)


def _verdict(t: int, f: int, tau: float) -> str:
    if f == 0:
        r = math.inf
    elif t == 0:
        r = -math.inf
    else:
        r = math.log10(t) - math.log10(f)
    if r >= tau:
        return "tracking"
    if r <= -tau:
        return "functional"
    return "mixed"


def reference_sift(labeled, tau, psl, positional_identity=False):
    """-> dict level -> {key: (tracking, functional, verdict)}, plus
    residual request id set."""
    out = {}
    current = list(labeled)
    for level in ("domain", "hostname", "script", "method"):
        groups = {}
        for rec, label in current:
            k = _key(rec, level, psl, positional_identity)
            groups.setdefault(k, []).append((rec, label))
        table = {}
        nxt = []
        for k, members in groups.items():
            t = sum(1 for _, lab in members if lab == Label.TRACKING)
            f = len(members) - t
            v = _verdict(t, f, tau)
            table[k] = (t, f, v)
            if v == "mixed":
                nxt.extend(members)
        out[level] = table
        current = nxt
    out["residual"] = {rec.request_id for rec, _ in current}
    return out
