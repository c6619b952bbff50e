import io
import json

import pytest
from hypothesis import given, strategies as st

from websift.trace import (
    Diagnostic,
    RequestRecord,
    StackFrame,
    TraceIOError,
    parse_trace,
    parse_trace_file,
)


def _line(**overrides):
    obj = {
        "request_id": "r1",
        "top_level_url": "https://site.test/",
        "frame_url": "https://site.test/",
        "resource_type": "XHR",
        "url": "https://cdn.site.test/x.js",
        "timestamp_ms": 1000,
        "call_stack": [
            {"function_name": "load", "script_url": "https://site.test/a.js", "line": 3, "column": 7},
            {"function_name": "main", "script_url": "https://site.test/b.js", "line": 1, "column": 0},
        ],
    }
    obj.update(overrides)
    return json.dumps(obj)


def test_well_formed_line():
    records, diags = parse_trace([_line()])
    assert len(records) == 1 and not diags
    rec = records[0]
    assert rec.call_stack[0].function_name == "load"
    assert rec.script_initiated


def test_missing_url_is_diagnosed():
    obj = json.loads(_line())
    del obj["url"]
    records, diags = parse_trace([json.dumps(obj)])
    assert records == []
    assert len(diags) == 1
    assert "url" in diags[0].reason
    assert diags[0].line_no == 1


def test_empty_call_stack_flags_non_script_initiated():
    records, diags = parse_trace([_line(call_stack=[])])
    assert len(records) == 1 and not diags
    assert not records[0].script_initiated


def test_invalid_json_line_number():
    records, diags = parse_trace([_line(), "{oops", _line(request_id="r2")])
    assert [r.request_id for r in records] == ["r1", "r2"]
    assert diags[0].line_no == 2 and "JSON" in diags[0].reason


def test_duplicate_request_id_last_wins():
    records, diags = parse_trace(
        [_line(timestamp_ms=1), _line(timestamp_ms=2), _line(request_id="r2")]
    )
    assert len(records) == 2
    assert [r.request_id for r in records] == ["r1", "r2"]
    assert records[0].timestamp_ms == 2
    assert len(diags) == 1 and "duplicate" in diags[0].reason


def test_unknown_resource_type_is_diagnosed():
    records, diags = parse_trace([_line(resource_type="Websocket")])
    assert not records and "resource_type" in diags[0].reason


def test_bytes_stream_and_blank_lines():
    data = (_line() + "\n\n" + _line(request_id="r2") + "\n").encode("utf-8")
    records, diags = parse_trace(io.BytesIO(data))
    assert len(records) == 2 and not diags


def test_io_failure_is_distinct_error(tmp_path):
    with pytest.raises(TraceIOError):
        parse_trace_file(str(tmp_path / "missing.jsonl"))


def test_frame_validation():
    with pytest.raises(ValueError):
        StackFrame("f", "", 1, 1)
    with pytest.raises(ValueError):
        StackFrame("f", "u", -1, 0)


FRAMES = st.builds(
    StackFrame,
    function_name=st.text(max_size=10),
    script_url=st.text(min_size=1, max_size=30),
    line=st.integers(min_value=0, max_value=10**6),
    column=st.integers(min_value=0, max_value=10**4),
)

RECORDS = st.builds(
    RequestRecord,
    request_id=st.text(min_size=1, max_size=12),
    top_level_url=st.just("https://site.test/"),
    frame_url=st.just("https://site.test/"),
    resource_type=st.sampled_from(["Document", "Script", "XHR", "Fetch", "Image", "Other"]),
    url=st.text(min_size=1, max_size=40),
    timestamp_ms=st.integers(min_value=0, max_value=2**48),
    call_stack=st.lists(FRAMES, max_size=4).map(tuple),
)


@given(record=RECORDS)
def test_round_trip(record):
    parsed, diags = parse_trace([record.to_json_line()])
    assert not diags
    assert parsed == [record]
