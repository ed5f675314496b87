"""Interaction logging: append-only NDJSON with a strict entry schema.

Entries record what kind of thing happened on which metric, never which
patient rows were on screen.  The detail whitelist is per action and
values are short scalars, so free text and record identifiers cannot end
up in the log file by accident.
"""

from __future__ import annotations

import datetime
import json
import threading
from dataclasses import dataclass
from typing import Any, Mapping, Optional

ACTIONS = ("expand", "collapse", "brush", "clear", "tab_change", "export",
           "layout_change", "download", "reload")

# Allowed detail keys per action.  Anything else is rejected.
_DETAIL_KEYS = {
    "expand": {"state"},
    "collapse": {"state"},
    "brush": {"kind", "bins", "field", "count"},
    "clear": {"kind"},
    "tab_change": {"view", "tab", "granularity"},
    "export": {"kind", "count", "format"},
    "layout_change": {"layout"},
    "download": {"kind", "format"},
    "reload": {"ok"},
}

_MAX_TEXT = 64
_MAX_LIST = 64


class LogSchemaError(Exception):
    pass


class LogSinkError(Exception):
    pass


@dataclass(frozen=True)
class LogEntry:
    timestamp: str
    session: str
    action: str
    metric: Optional[str]
    detail: Mapping[str, Any]

    def to_json(self) -> dict:
        return {"timestamp": self.timestamp, "session": self.session,
                "action": self.action, "metric": self.metric,
                "detail": dict(self.detail)}


def _check_scalar(key: str, value: Any):
    if isinstance(value, bool) or isinstance(value, (int, float)):
        return
    if isinstance(value, str):
        if len(value) > _MAX_TEXT:
            raise LogSchemaError(f"detail {key!r} exceeds {_MAX_TEXT} chars")
        if "\n" in value or "\r" in value:
            raise LogSchemaError(f"detail {key!r} contains line breaks")
        return
    raise LogSchemaError(f"detail {key!r} has unsupported type "
                         f"{type(value).__name__}")


def validate_log_entry(payload: Any) -> LogEntry:
    """Check one posted entry against the schema; raises LogSchemaError."""
    if not isinstance(payload, dict):
        raise LogSchemaError("log entry must be an object")
    known = {"timestamp", "session", "action", "metric", "detail"}
    unknown = set(payload) - known
    if unknown:
        raise LogSchemaError(f"unknown entry keys {sorted(unknown)!r}")
    session = payload.get("session")
    if not isinstance(session, str) or not session or len(session) > _MAX_TEXT:
        raise LogSchemaError("entry needs a short 'session' string")
    action = payload.get("action")
    if action not in ACTIONS:
        raise LogSchemaError(f"unknown action {action!r}")
    metric = payload.get("metric")
    if metric is not None and (not isinstance(metric, str)
                               or len(metric) > _MAX_TEXT):
        raise LogSchemaError("'metric' must be a short string")
    timestamp = payload.get("timestamp")
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    else:
        if not isinstance(timestamp, str):
            raise LogSchemaError("'timestamp' must be an ISO string")
        try:
            datetime.datetime.fromisoformat(timestamp.replace("Z", "+00:00"))
        except ValueError:
            raise LogSchemaError(f"bad timestamp {timestamp!r}") from None
    detail_raw = payload.get("detail", {})
    if not isinstance(detail_raw, dict):
        raise LogSchemaError("'detail' must be an object")
    allowed = _DETAIL_KEYS[action]
    detail: dict[str, Any] = {}
    for key, value in detail_raw.items():
        if key not in allowed:
            raise LogSchemaError(
                f"detail key {key!r} is not allowed for action {action!r}")
        if isinstance(value, list):
            if len(value) > _MAX_LIST:
                raise LogSchemaError(f"detail {key!r} list too long")
            for item in value:
                _check_scalar(key, item)
            detail[key] = list(value)
        else:
            _check_scalar(key, value)
            detail[key] = value
    return LogEntry(timestamp=timestamp, session=session, action=action,
                    metric=metric, detail=detail)


class LogSink:
    """Serialized append of compact JSON lines to one file."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()

    def append(self, entry: LogEntry) -> None:
        line = json.dumps(entry.to_json(), separators=(",", ":"),
                          ensure_ascii=False)
        try:
            with self._lock:
                with open(self.path, "a", encoding="utf-8") as handle:
                    handle.write(line + "\n")
        except OSError as exc:
            raise LogSinkError(str(exc)) from exc
