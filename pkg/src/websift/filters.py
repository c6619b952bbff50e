"""EasyList/EasyPrivacy-style filter rule parsing and request labeling.

A request that matches any blocking rule (and no exception rule) is
labeled Tracking; everything else is Functional.  Only the network-rule
subset needed for that verdict is supported: literal/``*``/``^``
patterns, ``|`` / ``||`` anchors, and the ``$`` options third-party,
~third-party, domain=, and resource-type restrictions.  Everything else
is skipped with a diagnostic, never guessed at.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

from .psl import UrlParts


class Label(enum.Enum):
    TRACKING = "tracking"
    FUNCTIONAL = "functional"


class RuleKind(enum.Enum):
    BLOCK = "block"
    EXCEPTION = "exception"


class Anchor(enum.Enum):
    NONE = "none"
    DOMAIN = "domain"
    START = "start"
    END = "end"
    START_AND_END = "start_and_end"


# Token kinds: ("lit", text) literal run, ("any",) wildcard *,
# ("sep",) separator placeholder ^, ("end",) hard end-of-URL pin
# (used when a domain-anchored pattern also ends with "|").
Token = tuple

ABP_TYPES = frozenset(
    {"script", "image", "stylesheet", "xmlhttprequest", "subdocument", "document", "other"}
)

_RESOURCE_TYPE_MAP = {
    "Script": "script",
    "Image": "image",
    "Stylesheet": "stylesheet",
    "XHR": "xmlhttprequest",
    "Fetch": "xmlhttprequest",
    "Subdocument": "subdocument",
    "Document": "document",
}


def map_resource_type(resource_type: str) -> str:
    """Trace resource_type -> ABP type option name (total mapping)."""
    return _RESOURCE_TYPE_MAP.get(resource_type, "other")


@dataclass(frozen=True)
class RuleOptions:
    third_party: Optional[bool] = None  # None = no party restriction
    types_include: frozenset = frozenset()
    types_exclude: frozenset = frozenset()
    domains_include: tuple[str, ...] = ()
    domains_exclude: tuple[str, ...] = ()


@dataclass(frozen=True)
class FilterRule:
    raw: str
    kind: RuleKind
    anchor: Anchor
    tokens: tuple[Token, ...]
    options: RuleOptions = RuleOptions()

    @property
    def longest_literal(self) -> str:
        """Longest literal run, used as a cheap substring prefilter."""
        lits = [t[1] for t in self.tokens if t[0] == "lit"]
        return max(lits, key=len) if lits else ""


@dataclass(frozen=True)
class RequestContext:
    url_parts: UrlParts
    page_registrable_domain: str
    resource_type: str

    @property
    def is_third_party(self) -> bool:
        return self.url_parts.registrable_domain != self.page_registrable_domain


@dataclass(frozen=True)
class RuleDiagnostic:
    source: str
    line_no: int
    reason: str

    def __str__(self) -> str:
        return f"{self.source}:{self.line_no}: {self.reason}"


class UnsupportedRule(ValueError):
    pass


_OPTION_LIST_RE = re.compile(r"^~?[a-z][a-z-]*(=[^,\s]+)?(,~?[a-z][a-z-]*(=[^,\s]+)?)*$", re.I)


def _tokenize(pattern: str, end_anchored_domain: bool) -> tuple[Token, ...]:
    tokens: list[Token] = []
    lit: list[str] = []

    def flush():
        if lit:
            tokens.append(("lit", "".join(lit).lower()))
            lit.clear()

    for ch in pattern:
        if ch == "*":
            flush()
            # collapse runs of *
            if not tokens or tokens[-1] != ("any",):
                tokens.append(("any",))
        elif ch == "^":
            flush()
            tokens.append(("sep",))
        else:
            lit.append(ch)
    flush()
    if end_anchored_domain:
        tokens.append(("end",))
    return tuple(tokens)


def parse_rule(raw: str) -> FilterRule:
    """Parse one network filter rule line.

    Raises UnsupportedRule for rules outside the supported subset.
    """
    text = raw.strip()
    kind = RuleKind.BLOCK
    if text.startswith("@@"):
        kind = RuleKind.EXCEPTION
        text = text[2:]

    options = RuleOptions()
    if "$" in text:
        pattern_part, opt_part = text.rsplit("$", 1)
        if _OPTION_LIST_RE.match(opt_part):
            options = _parse_options(opt_part)
            text = pattern_part
        # otherwise the "$" belongs to the pattern

    if len(text) > 1 and text.startswith("/") and text.endswith("/"):
        raise UnsupportedRule("raw regular-expression rules are unsupported")

    start_domain = False
    start_pin = False
    if text.startswith("||"):
        start_domain = True
        text = text[2:]
    elif text.startswith("|"):
        start_pin = True
        text = text[1:]
    end_pin = False
    if text.endswith("|"):
        end_pin = True
        text = text[:-1]

    if start_domain:
        anchor = Anchor.DOMAIN
        tokens = _tokenize(text, end_anchored_domain=end_pin)
    else:
        if start_pin and end_pin:
            anchor = Anchor.START_AND_END
        elif start_pin:
            anchor = Anchor.START
        elif end_pin:
            anchor = Anchor.END
        else:
            anchor = Anchor.NONE
        tokens = _tokenize(text, end_anchored_domain=False)

    if not any(t[0] == "lit" for t in tokens) and anchor in (Anchor.NONE, Anchor.END):
        raise UnsupportedRule("rule has no literal text and no anchor; matches everything")

    return FilterRule(raw=raw.strip(), kind=kind, anchor=anchor, tokens=tokens, options=options)


def _parse_options(opt_part: str) -> RuleOptions:
    third_party: Optional[bool] = None
    types_inc: set[str] = set()
    types_exc: set[str] = set()
    dom_inc: list[str] = []
    dom_exc: list[str] = []
    for opt in opt_part.split(","):
        opt = opt.strip()
        low = opt.lower()
        if low == "third-party":
            if third_party is False:
                raise UnsupportedRule("both third-party and ~third-party present")
            third_party = True
        elif low == "~third-party":
            if third_party is True:
                raise UnsupportedRule("both third-party and ~third-party present")
            third_party = False
        elif low.startswith("domain="):
            for d in opt[len("domain="):].split("|"):
                d = d.strip().lower()
                if not d:
                    continue
                if d.startswith("~"):
                    dom_exc.append(d[1:])
                else:
                    dom_inc.append(d)
            if not dom_inc and not dom_exc:
                raise UnsupportedRule("empty domain= option")
        elif low in ABP_TYPES:
            types_inc.add(low)
        elif low.startswith("~") and low[1:] in ABP_TYPES:
            types_exc.add(low[1:])
        else:
            raise UnsupportedRule(f"unsupported option {opt!r}")
    return RuleOptions(
        third_party=third_party,
        types_include=frozenset(types_inc),
        types_exclude=frozenset(types_exc),
        domains_include=tuple(dom_inc),
        domains_exclude=tuple(dom_exc),
    )


_COSMETIC_MARKERS = ("##", "#@#", "#?#")


def parse_filter_list(
    stream: Union[IO[bytes], IO[str], Iterable[str]], source_name: str
) -> tuple[list[FilterRule], list[RuleDiagnostic]]:
    """Parse a filter list; cosmetic rules and comments are skipped
    silently, unsupported network rules with a diagnostic."""
    rules: list[FilterRule] = []
    diagnostics: list[RuleDiagnostic] = []
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", errors="replace")
        line = raw.strip()
        if not line or line.startswith("!") or line.startswith("["):
            continue
        if any(m in line for m in _COSMETIC_MARKERS):
            continue
        try:
            rules.append(parse_rule(line))
        except UnsupportedRule as exc:
            diagnostics.append(RuleDiagnostic(source_name, line_no, str(exc)))
    return rules, diagnostics


_SEP_OK = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_-.%")


def _is_separator(ch: str) -> bool:
    return ch not in _SEP_OK


def _match_tokens(tokens: tuple[Token, ...], ti: int, url: str, pos: int, pin_end: bool) -> bool:
    if ti == len(tokens):
        return (not pin_end) or pos == len(url)
    t = tokens[ti]
    kind = t[0]
    if kind == "lit":
        s = t[1]
        if url.startswith(s, pos):
            return _match_tokens(tokens, ti + 1, url, pos + len(s), pin_end)
        return False
    if kind == "sep":
        if pos < len(url) and _is_separator(url[pos]):
            if _match_tokens(tokens, ti + 1, url, pos + 1, pin_end):
                return True
        if pos == len(url):
            return _match_tokens(tokens, ti + 1, url, pos, pin_end)
        return False
    if kind == "any":
        nxt = ti + 1
        if nxt == len(tokens):
            return True  # trailing * swallows the rest (reaches the end, so pin_end holds too)
        if tokens[nxt][0] == "lit":
            s = tokens[nxt][1]
            start = pos
            while True:
                found = url.find(s, start)
                if found < 0:
                    return False
                if _match_tokens(tokens, nxt + 1, url, found + len(s), pin_end):
                    return True
                start = found + 1
        for p in range(pos, len(url) + 1):
            if _match_tokens(tokens, nxt, url, p, pin_end):
                return True
        return False
    if kind == "end":
        return pos == len(url) and _match_tokens(tokens, ti + 1, url, pos, pin_end)
    raise AssertionError(f"unknown token kind {kind!r}")


def _host_span(url: str) -> tuple[int, int]:
    """(start, end) offsets of the host(+port) within a lowercased URL."""
    scheme_end = url.find("://")
    if scheme_end < 0:
        return (0, 0)
    auth_start = scheme_end + 3
    auth_end = len(url)
    for stop in "/?#":
        idx = url.find(stop, auth_start)
        if 0 <= idx < auth_end:
            auth_end = idx
    at = url.rfind("@", auth_start, auth_end)
    host_start = at + 1 if at >= 0 else auth_start
    return (host_start, auth_end)


def _domain_anchor_starts(url: str) -> list[int]:
    start, end = _host_span(url)
    positions = [start]
    for i in range(start, end):
        if url[i] == ".":
            positions.append(i + 1)
    return positions


def match_rule(rule: FilterRule, ctx: RequestContext) -> bool:
    """True iff the rule's pattern matches the request URL under its
    anchor semantics and all its options are satisfied."""
    if not _options_match(rule.options, ctx):
        return False
    url = ctx.url_parts.full_url.lower()
    return _pattern_matches(rule, url)


def _pattern_matches(rule: FilterRule, url: str) -> bool:
    tokens = rule.tokens
    anchor = rule.anchor
    if anchor == Anchor.START:
        return _match_tokens(tokens, 0, url, 0, pin_end=False)
    if anchor == Anchor.START_AND_END:
        return _match_tokens(tokens, 0, url, 0, pin_end=True)
    if anchor == Anchor.DOMAIN:
        return any(_match_tokens(tokens, 0, url, p, pin_end=False) for p in _domain_anchor_starts(url))
    pin_end = anchor == Anchor.END
    lit = rule.longest_literal
    if lit and lit not in url:
        return False
    return any(_match_tokens(tokens, 0, url, p, pin_end) for p in range(len(url) + 1))


def _domain_applies(domain: str, entry: str) -> bool:
    return domain == entry or domain.endswith("." + entry)


def _options_match(opts: RuleOptions, ctx: RequestContext) -> bool:
    if opts.third_party is not None and ctx.is_third_party != opts.third_party:
        return False
    rtype = map_resource_type(ctx.resource_type)
    if opts.types_include and rtype not in opts.types_include:
        return False
    if rtype in opts.types_exclude:
        return False
    page = ctx.page_registrable_domain.lower()
    if opts.domains_include and not any(_domain_applies(page, d) for d in opts.domains_include):
        return False
    if any(_domain_applies(page, d) for d in opts.domains_exclude):
        return False
    return True


class RuleSet:
    """Immutable indexed rule collection supporting request labeling.

    The index (a substring prefilter on each rule's longest literal) is
    an optimization only; verdicts are identical to a linear scan.
    """

    def __init__(self, rules: Iterable[FilterRule]):
        self._block: list[FilterRule] = []
        self._exception: list[FilterRule] = []
        for r in rules:
            (self._exception if r.kind == RuleKind.EXCEPTION else self._block).append(r)

    def __len__(self) -> int:
        return len(self._block) + len(self._exception)

    @staticmethod
    def _scan(rules: list[FilterRule], ctx: RequestContext, url_lower: str) -> bool:
        for r in rules:
            lit = r.longest_literal
            if lit and lit not in url_lower:
                continue
            if match_rule(r, ctx):
                return True
        return False

    def label(self, ctx: RequestContext) -> Label:
        url_lower = ctx.url_parts.full_url.lower()
        if self._scan(self._block, ctx, url_lower) and not self._scan(
            self._exception, ctx, url_lower
        ):
            return Label.TRACKING
        return Label.FUNCTIONAL


def label_request(rules: RuleSet, ctx: RequestContext) -> Label:
    """Tracking iff a Block rule matches and no Exception rule does."""
    return rules.label(ctx)
