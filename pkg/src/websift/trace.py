"""Trace record schema and JSON-lines trace ingestion.

A trace file holds one JSON object per line describing a single network
request observed during a page load, including the JavaScript call
stack that issued it (most recent frame first; async parent segments
flattened after the synchronous frames).  Records without a call stack
are kept but flagged, and excluded from classification downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

RESOURCE_TYPES = frozenset(
    {"Document", "Script", "XHR", "Fetch", "Image", "Stylesheet", "Subdocument", "Other"}
)


class TraceIOError(OSError):
    """Raised when the trace stream itself cannot be read."""


@dataclass(frozen=True)
class StackFrame:
    function_name: str  # "" for anonymous functions
    script_url: str
    line: int
    column: int

    def __post_init__(self):
        if not self.script_url:
            raise ValueError("script_url must be non-empty")
        if self.line < 0 or self.column < 0:
            raise ValueError("line/column must be >= 0")


@dataclass(frozen=True)
class RequestRecord:
    request_id: str
    top_level_url: str
    frame_url: str
    resource_type: str
    url: str
    timestamp_ms: int
    call_stack: tuple[StackFrame, ...]

    @property
    def script_initiated(self) -> bool:
        return len(self.call_stack) > 0

    def to_json_obj(self) -> dict:
        return {
            "request_id": self.request_id,
            "top_level_url": self.top_level_url,
            "frame_url": self.frame_url,
            "resource_type": self.resource_type,
            "url": self.url,
            "timestamp_ms": self.timestamp_ms,
            "call_stack": [
                {
                    "function_name": f.function_name,
                    "script_url": f.script_url,
                    "line": f.line,
                    "column": f.column,
                }
                for f in self.call_stack
            ],
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Diagnostic:
    line_no: int  # 1-based line in the trace file
    reason: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.reason}"


_REQUIRED_FIELDS = (
    "request_id",
    "top_level_url",
    "frame_url",
    "resource_type",
    "url",
    "timestamp_ms",
    "call_stack",
)

_FRAME_FIELDS = ("function_name", "script_url", "line", "column")


def _parse_frame(obj: object) -> StackFrame:
    if not isinstance(obj, dict):
        raise ValueError("stack frame is not an object")
    for name in _FRAME_FIELDS:
        if name not in obj:
            raise ValueError(f"stack frame missing field {name!r}")
    if not isinstance(obj["function_name"], str):
        raise ValueError("function_name must be a string")
    if not isinstance(obj["script_url"], str) or not obj["script_url"]:
        raise ValueError("script_url must be a non-empty string")
    for name in ("line", "column"):
        v = obj[name]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ValueError(f"{name} must be a non-negative integer")
    return StackFrame(
        function_name=obj["function_name"],
        script_url=obj["script_url"],
        line=obj["line"],
        column=obj["column"],
    )


def parse_record(obj: object) -> RequestRecord:
    """Validate one decoded JSON object against the record schema."""
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise ValueError(f"missing field {name!r}")
    for name in ("request_id", "top_level_url", "frame_url", "resource_type", "url"):
        if not isinstance(obj[name], str):
            raise ValueError(f"{name} must be a string")
    if obj["resource_type"] not in RESOURCE_TYPES:
        raise ValueError(f"unknown resource_type {obj['resource_type']!r}")
    ts = obj["timestamp_ms"]
    if not isinstance(ts, int) or isinstance(ts, bool) or ts < 0:
        raise ValueError("timestamp_ms must be a non-negative integer")
    if not obj["url"]:
        raise ValueError("url must be non-empty")
    stack_obj = obj["call_stack"]
    if not isinstance(stack_obj, list):
        raise ValueError("call_stack must be an array")
    frames = tuple(_parse_frame(f) for f in stack_obj)
    return RequestRecord(
        request_id=obj["request_id"],
        top_level_url=obj["top_level_url"],
        frame_url=obj["frame_url"],
        resource_type=obj["resource_type"],
        url=obj["url"],
        timestamp_ms=ts,
        call_stack=frames,
    )


def parse_trace(
    stream: Union[IO[bytes], IO[str], Iterable[str]],
) -> tuple[list[RequestRecord], list[Diagnostic]]:
    """Parse a JSON-lines trace stream.

    Malformed lines become diagnostics, never silent drops.  Duplicate
    request_ids are diagnosed and resolved last-wins.  Record order is
    preserved (a last-wins replacement keeps the later position).
    """
    records: list[RequestRecord] = []
    diagnostics: list[Diagnostic] = []
    by_id: dict[str, int] = {}  # request_id -> index in records
    try:
        for line_no, raw in enumerate(stream, start=1):
            if isinstance(raw, bytes):
                try:
                    raw = raw.decode("utf-8")
                except UnicodeDecodeError as exc:
                    diagnostics.append(Diagnostic(line_no, f"invalid UTF-8: {exc}"))
                    continue
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append(Diagnostic(line_no, f"invalid JSON: {exc.msg}"))
                continue
            try:
                record = parse_record(obj)
            except ValueError as exc:
                diagnostics.append(Diagnostic(line_no, str(exc)))
                continue
            if record.request_id in by_id:
                diagnostics.append(
                    Diagnostic(line_no, f"duplicate request_id {record.request_id!r}; keeping later record")
                )
                del records[by_id[record.request_id]]
                by_id = {r.request_id: i for i, r in enumerate(records)}
            by_id[record.request_id] = len(records)
            records.append(record)
    except OSError as exc:
        raise TraceIOError(f"trace stream read failed: {exc}") from exc
    return records, diagnostics


def parse_trace_file(path: str) -> tuple[list[RequestRecord], list[Diagnostic]]:
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise TraceIOError(f"cannot open trace file {path!r}: {exc}") from exc
    with fh:
        return parse_trace(fh)
