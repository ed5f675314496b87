"""Interaction log schema and sink."""

import json
import threading

import pytest

from qualdash.logs import ACTIONS, LogSchemaError, LogSink, validate_log_entry


def entry(**overrides):
    doc = {"session": "s-1", "action": "brush", "metric": "Mortality",
           "detail": {"kind": "time", "bins": ["2019-02-01"], "count": 3}}
    doc.update(overrides)
    return doc


def test_valid_entry_passes():
    out = validate_log_entry(entry())
    assert out.action == "brush"
    assert out.metric == "Mortality"
    assert out.detail == {"kind": "time", "bins": ["2019-02-01"], "count": 3}
    assert out.timestamp  # defaulted


def test_supplied_timestamp_kept():
    out = validate_log_entry(entry(timestamp="2026-08-22T10:00:00Z"))
    assert out.timestamp == "2026-08-22T10:00:00Z"


def test_every_action_known():
    for action in ACTIONS:
        out = validate_log_entry({"session": "s", "action": action})
        assert out.detail == {}


@pytest.mark.parametrize("bad", [
    entry(action="open_patient_record"),
    entry(detail={"record_ids": [1, 2, 3]}),
    entry(detail={"patient": "x"}),
    entry(action="expand", detail={"bins": ["2019-02-01"]}),
    entry(session=""),
    entry(session=None),
    entry(session="x" * 65),
    entry(extra="y"),
    entry(timestamp="not a time"),
    entry(metric="m" * 65),
    entry(detail={"kind": "k" * 65}),
    entry(detail={"kind": "line one\nline two"}),
    entry(detail={"bins": ["b"] * 65}),
    entry(detail={"kind": {"nested": True}}),
    entry(detail="time"),
    "not an object",
])
def test_rejected_payloads(bad):
    with pytest.raises(LogSchemaError):
        validate_log_entry(bad)


def test_sink_appends_ndjson(tmp_path):
    path = tmp_path / "usage.ndjson"
    sink = LogSink(str(path))
    for i in range(3):
        sink.append(validate_log_entry(entry(session=f"s-{i}")))
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert [json.loads(l)["session"] for l in lines] == ["s-0", "s-1", "s-2"]


def test_sink_concurrent_appends_stay_line_atomic(tmp_path):
    path = tmp_path / "usage.ndjson"
    sink = LogSink(str(path))
    per_thread = 50

    def work(tag):
        e = validate_log_entry(entry(session=f"s-{tag}"))
        for _ in range(per_thread):
            sink.append(e)

    threads = [threading.Thread(target=work, args=(t,)) for t in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    lines = path.read_text().splitlines()
    assert len(lines) == 8 * per_thread
    for line in lines:
        assert json.loads(line)["action"] == "brush"
