"""Initiator attribution: which script / method issued a request.

The counting entity at script and method granularity is the top stack
frame (the code that directly issued the request).  Ancestral label
propagation over the whole stack is a separate analysis output and does
not affect the per-level tallies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

from .filters import Label
from .trace import RequestRecord, StackFrame

ANONYMOUS = "<anonymous>"


class Granularity(enum.Enum):
    DOMAIN = "domain"
    HOSTNAME = "hostname"
    SCRIPT = "script"
    METHOD = "method"


@dataclass(frozen=True)
class EntityKey:
    granularity: Granularity
    key: Union[str, tuple[str, str]]  # (script_url, method_name) for METHOD

    def as_text(self) -> str:
        if self.granularity == Granularity.METHOD:
            script_url, method = self.key
            return f"{script_url}::{method}"
        return self.key


class NotScriptInitiated(ValueError):
    def __init__(self, request_id: str):
        super().__init__(f"request {request_id!r} is not script-initiated (empty call stack)")
        self.request_id = request_id


def method_name_of(frame: StackFrame, positional_identity: bool = False) -> str:
    """Frame's method name; anonymous functions get a sentinel,
    optionally disambiguated by source position."""
    name = frame.function_name or ANONYMOUS
    if positional_identity and not frame.function_name:
        name = f"{ANONYMOUS}:{frame.line}:{frame.column}"
    return name


def initiator_script(record: RequestRecord) -> EntityKey:
    """Script URL of the top (most recent) stack frame."""
    if not record.call_stack:
        raise NotScriptInitiated(record.request_id)
    return EntityKey(Granularity.SCRIPT, record.call_stack[0].script_url)


def initiator_method(record: RequestRecord, positional_identity: bool = False) -> EntityKey:
    """(script_url, method_name) of the top stack frame."""
    if not record.call_stack:
        raise NotScriptInitiated(record.request_id)
    top = record.call_stack[0]
    return EntityKey(
        Granularity.METHOD, (top.script_url, method_name_of(top, positional_identity))
    )


def propagate_labels(
    labeled_records: Iterable[tuple[RequestRecord, Label]],
) -> dict[EntityKey, set[Label]]:
    """Accumulate each record's label onto every script in its stack.

    A script seen in both tracking and functional stacks ends up with
    both labels.  The merge is a set union, so the result is invariant
    under record order and safe to compute in parallel partials.
    """
    out: dict[EntityKey, set[Label]] = {}
    for record, label in labeled_records:
        seen: set[str] = set()
        for frame in record.call_stack:
            if frame.script_url in seen:
                continue
            seen.add(frame.script_url)
            key = EntityKey(Granularity.SCRIPT, frame.script_url)
            out.setdefault(key, set()).add(label)
    return out
