"""Public Suffix List lookups and request-URL decomposition.

Loads a pinned ``public_suffix_list.dat`` snapshot (never fetched at
runtime) and answers "what is the registrable domain (eTLD+1) of this
host" queries.  Rule semantics follow the canonical algorithm: the
longest matching rule wins, exception rules beat wildcard rules, and an
unlisted TLD acts as a public suffix by itself.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from typing import Iterable, Optional
from urllib.parse import urlsplit


class UrlError(ValueError):
    """Raised for URLs that cannot be decomposed (no host, unparsable)."""

    def __init__(self, url: str, reason: str):
        super().__init__(f"cannot decompose {url!r}: {reason}")
        self.url = url
        self.reason = reason


@dataclass(frozen=True)
class UrlParts:
    full_url: str
    hostname: str
    registrable_domain: str
    path_and_query: str


def _canon_label(label: str) -> str:
    """Lower-case a hostname label and punycode it when non-ASCII."""
    label = label.lower()
    if label.isascii():
        return label
    try:
        return label.encode("idna").decode("ascii")
    except UnicodeError:
        return label


def _canon_labels(host: str) -> list[str]:
    return [_canon_label(l) for l in host.split(".")]


class PublicSuffixList:
    """Parsed snapshot of the public_suffix_list.dat rule file."""

    def __init__(self, rules: Iterable[str]):
        self._exact: set[tuple[str, ...]] = set()
        self._wildcard: set[tuple[str, ...]] = set()  # labels after "*."
        self._exception: set[tuple[str, ...]] = set()
        for rule in rules:
            if rule.startswith("!"):
                self._exception.add(tuple(_canon_labels(rule[1:])))
            elif rule.startswith("*."):
                self._wildcard.add(tuple(_canon_labels(rule[2:])))
            else:
                self._exact.add(tuple(_canon_labels(rule)))

    @classmethod
    def from_text(cls, text: str) -> "PublicSuffixList":
        rules = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            # Entries may carry trailing whitespace-separated comments.
            rules.append(line.split()[0])
        return cls(rules)

    @classmethod
    def from_file(cls, path: str) -> "PublicSuffixList":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def public_suffix_length(self, labels: list[str]) -> int:
        """Number of trailing labels forming the public suffix."""
        canon = [_canon_label(l) for l in labels]
        n = len(canon)
        best = 1  # default rule "*": an unlisted TLD is a public suffix
        for i in range(n):
            tail = tuple(canon[i:])
            if tail in self._exception:
                # The public suffix is the exception rule minus its first label.
                return n - i - 1
            if tail in self._exact:
                best = max(best, n - i)
            if len(tail) > 1 and tail[1:] in self._wildcard:
                best = max(best, n - i)
        return best

    def registrable_domain(self, host: str) -> Optional[str]:
        """eTLD+1 of ``host``, or None when the host is itself a public
        suffix (or empty / has empty labels)."""
        if not host:
            return None
        host = host.lower().rstrip(".")
        labels = host.split(".")
        if any(not l for l in labels):
            return None
        suffix_len = self.public_suffix_length(labels)
        if suffix_len >= len(labels):
            return None
        return ".".join(labels[-(suffix_len + 1):])


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        return False


def decompose_url(url: str, psl: PublicSuffixList) -> UrlParts:
    """Split an absolute URL into hostname, eTLD+1, and path+query.

    IP-address hosts and hosts the PSL cannot split (single labels,
    bare public suffixes) use the host verbatim as registrable domain.
    """
    try:
        parts = urlsplit(url)
    except ValueError as exc:
        raise UrlError(url, str(exc))
    host = parts.hostname
    if not host:
        raise UrlError(url, "no host component")
    host = host.rstrip(".")
    if not host:
        raise UrlError(url, "empty host")
    if _is_ip(host):
        registrable = host
    else:
        registrable = psl.registrable_domain(host) or host
    path_and_query = parts.path
    if parts.query:
        path_and_query += "?" + parts.query
    return UrlParts(
        full_url=url,
        hostname=host,
        registrable_domain=registrable,
        path_and_query=path_and_query,
    )
