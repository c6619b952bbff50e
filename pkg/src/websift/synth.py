"""Synthetic trace generation with planted ground truth.

A scenario declares the entity hierarchy (domains -> hostnames ->
scripts -> methods) with per-method tracking/functional request counts
and optional ancestor stack frames.  The generator emits a JSON-lines
trace, a matching mini filter list, a minimal PSL snapshot, and the
expected classification computed constructively from the plant (it
never runs the classifier).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .filters import RuleSet, Label, RequestContext, parse_filter_list
from .psl import PublicSuffixList, decompose_url
from .sift import Verdict, ratio, verdict_for
from .trace import RequestRecord, StackFrame

TRACK_PATH = "/trk/"
CONTENT_PATH = "/content/"

# One rule suffices: every planted tracking URL carries the marker path.
# (A trailing * avoids the /.../ raw-regex rule form.)
FILTER_LIST_TEXT = "! synthetic fixture list\n" + TRACK_PATH + "*\n"


class ScenarioError(ValueError):
    pass


Frame = tuple[str, str]  # (function_name, script_url)


@dataclass
class MethodSpec:
    name: str
    tracking: int
    functional: int
    # Extra ancestor frames (innermost first) appended below the top frame.
    tracking_ancestors: list[Frame] = field(default_factory=list)
    functional_ancestors: list[Frame] = field(default_factory=list)


@dataclass
class ScriptSpec:
    url: str
    methods: list[MethodSpec]


@dataclass
class HostSpec:
    name: str
    scripts: list[ScriptSpec]


@dataclass
class DomainSpec:
    name: str
    hosts: list[HostSpec]


@dataclass
class Scenario:
    domains: list[DomainSpec]
    page_url: str = "https://www.page.test/"
    threshold: float = 2.0


@dataclass
class ExpectedEntity:
    tracking: int
    functional: int
    verdict: Verdict


@dataclass
class ExpectedLevel:
    entities: dict[str, ExpectedEntity]  # keyed by entity text
    tracking_requests: int
    functional_requests: int
    mixed_requests: int


@dataclass
class Expected:
    levels: list[ExpectedLevel]  # domain, hostname, script, method
    total_requests: int
    residual_count: int
    # mixed method key text -> ordered divergence node list
    divergence: dict[str, list[Frame]]


def scenario_from_json(obj: dict) -> Scenario:
    domains = []
    for d in obj["domains"]:
        hosts = []
        for h in d["hosts"]:
            scripts = []
            for s in h["scripts"]:
                methods = []
                for m in s["methods"]:
                    methods.append(
                        MethodSpec(
                            name=m["name"],
                            tracking=m["tracking"],
                            functional=m["functional"],
                            tracking_ancestors=[tuple(f) for f in m.get("tracking_ancestors", [])],
                            functional_ancestors=[tuple(f) for f in m.get("functional_ancestors", [])],
                        )
                    )
                scripts.append(ScriptSpec(url=s["url"], methods=methods))
            hosts.append(HostSpec(name=h["name"], scripts=scripts))
        domains.append(DomainSpec(name=d["name"], hosts=hosts))
    return Scenario(
        domains=domains,
        page_url=obj.get("page_url", "https://www.page.test/"),
        threshold=obj.get("threshold", 2.0),
    )


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_json(json.load(fh))


def _validate(scenario: Scenario) -> None:
    tau = scenario.threshold
    seen_domains: set[str] = set()
    seen_hosts: set[str] = set()
    seen_scripts: set[str] = set()
    for d in scenario.domains:
        if d.name in seen_domains:
            raise ScenarioError(f"duplicate domain {d.name!r}")
        seen_domains.add(d.name)
        if len(d.name.split(".")) != 2:
            raise ScenarioError(
                f"domain {d.name!r} must be exactly <label>.<tld> for the generated PSL"
            )
        if TRACK_PATH.strip("/") in d.name:
            raise ScenarioError(f"domain {d.name!r} collides with the tracking path marker")
        d_t, d_f = _domain_counts(d)
        d_verdict = verdict_for(ratio(d_t, d_f), tau) if d_t + d_f else None
        for h in d.hosts:
            if h.name in seen_hosts:
                raise ScenarioError(f"duplicate hostname {h.name!r}")
            seen_hosts.add(h.name)
            if not (h.name == d.name or h.name.endswith("." + d.name)):
                raise ScenarioError(f"hostname {h.name!r} is not under domain {d.name!r}")
            h_t, h_f = _host_counts(h)
            if h_t + h_f == 0:
                raise ScenarioError(f"hostname {h.name!r} has no requests")
            h_verdict = verdict_for(ratio(h_t, h_f), tau)
            if h_verdict == Verdict.MIXED and d_verdict != Verdict.MIXED:
                raise ScenarioError(
                    f"mixed hostname {h.name!r} under non-mixed domain {d.name!r} "
                    "is unreachable by the hierarchy"
                )
            for s in h.scripts:
                if s.url in seen_scripts:
                    raise ScenarioError(f"duplicate script url {s.url!r}")
                seen_scripts.add(s.url)
                s_t, s_f = _script_counts(s)
                if s_t + s_f == 0:
                    raise ScenarioError(f"script {s.url!r} has no requests")
                s_verdict = verdict_for(ratio(s_t, s_f), tau)
                if s_verdict == Verdict.MIXED and h_verdict != Verdict.MIXED:
                    raise ScenarioError(
                        f"mixed script {s.url!r} under non-mixed hostname {h.name!r} "
                        "is unreachable by the hierarchy"
                    )
                names = [m.name for m in s.methods]
                if len(names) != len(set(names)):
                    raise ScenarioError(f"duplicate method names in script {s.url!r}")
                for m in s.methods:
                    if m.tracking < 0 or m.functional < 0 or m.tracking + m.functional == 0:
                        raise ScenarioError(
                            f"method {m.name!r} needs non-negative counts summing to >= 1"
                        )
                    m_verdict = verdict_for(ratio(m.tracking, m.functional), tau)
                    if m_verdict == Verdict.MIXED and s_verdict != Verdict.MIXED:
                        raise ScenarioError(
                            f"mixed method {m.name!r} under non-mixed script {s.url!r} "
                            "is unreachable by the hierarchy"
                        )


def _method_counts(m: MethodSpec) -> tuple[int, int]:
    return m.tracking, m.functional


def _script_counts(s: ScriptSpec) -> tuple[int, int]:
    t = sum(m.tracking for m in s.methods)
    f = sum(m.functional for m in s.methods)
    return t, f


def _host_counts(h: HostSpec) -> tuple[int, int]:
    t = sum(_script_counts(s)[0] for s in h.scripts)
    f = sum(_script_counts(s)[1] for s in h.scripts)
    return t, f


def _domain_counts(d: DomainSpec) -> tuple[int, int]:
    t = sum(_host_counts(h)[0] for h in d.hosts)
    f = sum(_host_counts(h)[1] for h in d.hosts)
    return t, f


def psl_text_for(scenario: Scenario) -> str:
    """Minimal PSL snapshot: one rule per TLD used by the scenario."""
    tlds = sorted({d.name.rsplit(".", 1)[1] for d in scenario.domains} | {"test"})
    return "// synthetic fixture PSL\n" + "\n".join(tlds) + "\n"


def _method_stack(
    scenario: Scenario, script: ScriptSpec, method: MethodSpec, label: Label, rng: random.Random
) -> tuple[StackFrame, ...]:
    ancestors = method.tracking_ancestors if label == Label.TRACKING else method.functional_ancestors
    frames = [StackFrame(method.name, script.url, rng.randint(1, 5000), rng.randint(0, 200))]
    for fn, url in ancestors:
        frames.append(StackFrame(fn, url, rng.randint(1, 5000), rng.randint(0, 200)))
    return tuple(frames)


def generate_records(scenario: Scenario, seed: int) -> list[RequestRecord]:
    """Deterministic trace records for the scenario (shuffled order)."""
    _validate(scenario)
    rng = random.Random(seed)
    pending: list[tuple[str, ScriptSpec, MethodSpec, Label]] = []
    for d in scenario.domains:
        for h in d.hosts:
            for s in h.scripts:
                for m in s.methods:
                    pending.extend((h.name, s, m, Label.TRACKING) for _ in range(m.tracking))
                    pending.extend((h.name, s, m, Label.FUNCTIONAL) for _ in range(m.functional))
    rng.shuffle(pending)
    records = []
    for i, (host, script, method, label) in enumerate(pending):
        if label == Label.TRACKING:
            url = f"https://{host}{TRACK_PATH}{i}.gif"
            rtype = rng.choice(["Image", "XHR", "Fetch"])
        else:
            url = f"https://{host}{CONTENT_PATH}{i}.js"
            rtype = rng.choice(["Script", "XHR", "Fetch", "Image"])
        records.append(
            RequestRecord(
                request_id=f"r{i:06d}",
                top_level_url=scenario.page_url,
                frame_url=scenario.page_url,
                resource_type=rtype,
                url=url,
                timestamp_ms=1_600_000_000_000 + i,
                call_stack=_method_stack(scenario, script, method, label, rng),
            )
        )
    return records


def expected_result(scenario: Scenario) -> Expected:
    """Ground-truth classification computed from the plant alone."""
    tau = scenario.threshold
    levels: list[ExpectedLevel] = []

    def level_from(entities: list[tuple[str, int, int]]) -> ExpectedLevel:
        ents: dict[str, ExpectedEntity] = {}
        counts = {Verdict.TRACKING: 0, Verdict.FUNCTIONAL: 0, Verdict.MIXED: 0}
        for key, t, f in entities:
            v = verdict_for(ratio(t, f), tau)
            ents[key] = ExpectedEntity(t, f, v)
            counts[v] += t + f
        return ExpectedLevel(
            ents, counts[Verdict.TRACKING], counts[Verdict.FUNCTIONAL], counts[Verdict.MIXED]
        )

    domain_level = level_from([(d.name, *_domain_counts(d)) for d in scenario.domains])
    mixed_domains = [
        d for d in scenario.domains
        if domain_level.entities[d.name].verdict == Verdict.MIXED
    ]
    hosts = [h for d in mixed_domains for h in d.hosts]
    host_level = level_from([(h.name, *_host_counts(h)) for h in hosts])
    mixed_hosts = [h for h in hosts if host_level.entities[h.name].verdict == Verdict.MIXED]
    scripts = [s for h in mixed_hosts for s in h.scripts]
    script_level = level_from([(s.url, *_script_counts(s)) for s in scripts])
    mixed_scripts = [s for s in scripts if script_level.entities[s.url].verdict == Verdict.MIXED]
    methods = [(s, m) for s in mixed_scripts for m in s.methods]
    method_level = level_from(
        [(_method_key(s, m), m.tracking, m.functional) for s, m in methods]
    )
    levels = [domain_level, host_level, script_level, method_level]

    total = domain_level.tracking_requests + domain_level.functional_requests + domain_level.mixed_requests
    residual = method_level.mixed_requests

    divergence: dict[str, list[Frame]] = {}
    for s, m in methods:
        key = _method_key(s, m)
        if method_level.entities[key].verdict != Verdict.MIXED:
            continue
        divergence[key] = _expected_divergence(s, m)
    return Expected(levels=levels, total_requests=total, residual_count=residual, divergence=divergence)


def _method_key(script: ScriptSpec, method: MethodSpec) -> str:
    return f"{script.url}::{method.name or '<anonymous>'}"


def _chain_nodes(script: ScriptSpec, method: MethodSpec, ancestors: list[Frame]) -> list[tuple[str, str]]:
    chain = [(method.name, script.url)] + list(ancestors)
    return [(url, fn or "<anonymous>") for fn, url in chain]


def _expected_divergence(script: ScriptSpec, method: MethodSpec) -> list[Frame]:
    """Tracking-only nodes of the merged stacks, ordered by BFS
    distance from the outermost frames of both chains."""
    t_nodes = _chain_nodes(script, method, method.tracking_ancestors)
    f_nodes = _chain_nodes(script, method, method.functional_ancestors)
    edges: dict[tuple[str, str], set] = {}
    for chain in (t_nodes, f_nodes):
        for i in range(len(chain) - 1):
            edges.setdefault(chain[i + 1], set()).add(chain[i])
    dist = {}
    frontier = sorted({t_nodes[-1], f_nodes[-1]})
    for r in frontier:
        dist[r] = 0
    while frontier:
        nxt = []
        for node in frontier:
            for callee in edges.get(node, ()):
                if callee not in dist:
                    dist[callee] = dist[node] + 1
                    nxt.append(callee)
        frontier = sorted(nxt)
    only_tracking = sorted(set(t_nodes) - set(f_nodes), key=lambda n: (dist[n], n))
    return only_tracking


def self_check(scenario: Scenario, records: list[RequestRecord]) -> None:
    """Verify the generated filter list labels every generated request
    exactly as planted."""
    psl = PublicSuffixList.from_text(psl_text_for(scenario))
    rules, diags = parse_filter_list(FILTER_LIST_TEXT.splitlines(), "synthetic")
    if diags:
        raise ScenarioError(f"generated filter list failed to parse: {diags}")
    ruleset = RuleSet(rules)
    page_domain = decompose_url(scenario.page_url, psl).registrable_domain
    for rec in records:
        ctx = RequestContext(
            url_parts=decompose_url(rec.url, psl),
            page_registrable_domain=page_domain,
            resource_type=rec.resource_type,
        )
        got = ruleset.label(ctx)
        planted = Label.TRACKING if TRACK_PATH in rec.url else Label.FUNCTIONAL
        if got != planted:
            raise ScenarioError(f"self-check failed for {rec.url}: {got} != {planted}")


def generate(
    scenario: Scenario, seed: int
) -> tuple[list[RequestRecord], str, str, Expected]:
    """-> (records, filter list text, PSL text, expected result)."""
    records = generate_records(scenario, seed)
    self_check(scenario, records)
    return records, FILTER_LIST_TEXT, psl_text_for(scenario), expected_result(scenario)


def write_fixture(scenario: Scenario, seed: int, out_dir: str) -> dict:
    """Write trace.jsonl / filters.txt / psl.dat / expected.json."""
    import os

    records, filters_text, psl_text, expected = generate(scenario, seed)
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.jsonl")
    with open(trace_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json_line() + "\n")
    with open(os.path.join(out_dir, "filters.txt"), "w", encoding="utf-8") as fh:
        fh.write(filters_text)
    with open(os.path.join(out_dir, "psl.dat"), "w", encoding="utf-8") as fh:
        fh.write(psl_text)
    expected_obj = expected_to_json(expected)
    with open(os.path.join(out_dir, "expected.json"), "w", encoding="utf-8") as fh:
        json.dump(expected_obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return expected_obj


def expected_to_json(expected: Expected) -> dict:
    level_names = ["domain", "hostname", "script", "method"]
    return {
        "total_requests": expected.total_requests,
        "residual_count": expected.residual_count,
        "levels": [
            {
                "level": name,
                "tracking_requests": lvl.tracking_requests,
                "functional_requests": lvl.functional_requests,
                "mixed_requests": lvl.mixed_requests,
                "entities": {
                    key: {
                        "tracking": e.tracking,
                        "functional": e.functional,
                        "verdict": e.verdict.value,
                    }
                    for key, e in lvl.entities.items()
                },
            }
            for name, lvl in zip(level_names, expected.levels)
        ],
        "divergence": {k: [list(n) for n in v] for k, v in expected.divergence.items()},
    }


def canonical_scenario() -> Scenario:
    """The canonical pure/mixed hierarchy: two pure domains, one mixed
    domain with pure and mixed hostnames, down to a mixed method."""
    return Scenario(
        domains=[
            DomainSpec("ads.com", [HostSpec("ads.com", [
                ScriptSpec("https://ads.com/serve.js", [MethodSpec("serve", 5, 0)]),
            ])]),
            DomainSpec("news.com", [HostSpec("news.com", [
                ScriptSpec("https://news.com/page.js", [MethodSpec("render", 0, 5)]),
            ])]),
            DomainSpec("google.com", [
                HostSpec("ad.google.com", [
                    ScriptSpec("https://ad.google.com/ads.js", [MethodSpec("show", 4, 0)]),
                ]),
                HostSpec("maps.google.com", [
                    ScriptSpec("https://maps.google.com/maps.js", [MethodSpec("draw", 0, 4)]),
                ]),
                HostSpec("cdn.google.com", [
                    ScriptSpec("https://cdn.google.com/sdk.js", [MethodSpec("init", 3, 0)]),
                    ScriptSpec("https://cdn.google.com/stack.js", [MethodSpec("push", 0, 3)]),
                    ScriptSpec("https://cdn.google.com/clone.js", [
                        MethodSpec("m1", 2, 0),
                        MethodSpec("m2", 1, 1),
                        MethodSpec("m3", 0, 2),
                    ]),
                ]),
            ]),
        ]
    )


def random_scenario(rng: random.Random, max_requests: int = 200) -> Scenario:
    """Random but always-consistent scenario for property tests."""
    tau = 2.0
    scenario = Scenario(domains=[], threshold=tau)
    budget = rng.randint(1, max_requests)
    spent = 0
    d_idx = 0
    while spent < budget:
        d_idx += 1
        domain = f"site{d_idx}.test"
        mixed_domain = rng.random() < 0.5
        hosts = []
        n_hosts = rng.randint(1, 3) if mixed_domain else 1
        for h_idx in range(n_hosts):
            host = domain if h_idx == 0 and rng.random() < 0.2 else f"h{h_idx}.{domain}"
            mixed_host = mixed_domain and rng.random() < 0.5
            scripts = []
            n_scripts = rng.randint(1, 3) if mixed_host else 1
            for s_idx in range(n_scripts):
                script = f"https://{host}/s{d_idx}_{h_idx}_{s_idx}.js"
                mixed_script = mixed_host and rng.random() < 0.5
                methods = []
                n_methods = rng.randint(1, 3) if mixed_script else 1
                for m_idx in range(n_methods):
                    name = "" if m_idx == 0 and rng.random() < 0.2 else f"m{m_idx}"
                    mixed_method = mixed_script and rng.random() < 0.5
                    if mixed_method:
                        t = rng.randint(1, 4)
                        f = rng.randint(max(1, t // 10), 4)
                    elif rng.random() < 0.5:
                        t, f = rng.randint(1, 5), 0
                    else:
                        t, f = 0, rng.randint(1, 5)
                    methods.append(MethodSpec(name, t, f))
                    spent += t + f
                scripts.append(ScriptSpec(script, methods))
            hosts.append(HostSpec(host, scripts))
        scenario.domains.append(DomainSpec(domain, hosts))
        if spent >= budget:
            break
    return _rebalance(scenario, tau)


def _rebalance(scenario: Scenario, tau: float) -> Scenario:
    """Force consistency: whenever a child is mixed, make every
    ancestor mixed by appending a balancing pure sibling subtree."""
    for d in scenario.domains:
        for h in d.hosts:
            for s in h.scripts:
                s_t, s_f = _script_counts(s)
                has_mixed_method = any(
                    verdict_for(ratio(m.tracking, m.functional), tau) == Verdict.MIXED
                    for m in s.methods
                )
                if has_mixed_method and verdict_for(ratio(s_t, s_f), tau) != Verdict.MIXED:
                    # balance the script with a counterweight method
                    if s_t > s_f:
                        s.methods.append(MethodSpec(f"bal{len(s.methods)}", 0, s_t))
                    else:
                        s.methods.append(MethodSpec(f"bal{len(s.methods)}", s_f or 1, 0))
            h_t, h_f = _host_counts(h)
            has_mixed_script = any(
                verdict_for(ratio(*_script_counts(s)), tau) == Verdict.MIXED for s in h.scripts
            )
            if has_mixed_script and verdict_for(ratio(h_t, h_f), tau) != Verdict.MIXED:
                url = f"https://{h.name}/bal{len(h.scripts)}.js"
                if h_t > h_f:
                    h.scripts.append(ScriptSpec(url, [MethodSpec("b", 0, h_t)]))
                else:
                    h.scripts.append(ScriptSpec(url, [MethodSpec("b", h_f or 1, 0)]))
        d_t, d_f = _domain_counts(d)
        has_mixed_host = any(
            verdict_for(ratio(*_host_counts(h)), tau) == Verdict.MIXED for h in d.hosts
        )
        if has_mixed_host and verdict_for(ratio(d_t, d_f), tau) != Verdict.MIXED:
            host = f"bal.{d.name}"
            url = f"https://{host}/bal.js"
            if d_t > d_f:
                d.hosts.append(HostSpec(host, [ScriptSpec(url, [MethodSpec("b", 0, d_t)])]))
            else:
                d.hosts.append(HostSpec(host, [ScriptSpec(url, [MethodSpec("b", d_f or 1, 0)])]))
    _validate(scenario)
    return scenario
