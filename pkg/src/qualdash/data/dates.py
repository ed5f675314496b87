"""Date parsing for the formats that turn up in audit exports.

Canonical precision is the calendar day.  Accepted inputs:

  2019-01-28              ISO date
  2019-01-28T14:03:00     ISO datetime, time-of-day discarded
  28/01/2019              day first
  28-Jan-2019             abbreviated month name, any case
  1548633600              POSIX epoch seconds (all-digit string or int)

Anything else, including syntactically fine but impossible days such as
31/02/2019, is Missing (None).
"""

from __future__ import annotations

import datetime
import re

_ISO_DATE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_ISO_DATETIME = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[T ]\d{2}:\d{2}(:\d{2})?"
                           r"(\.\d+)?(Z|[+-]\d{2}:?\d{2})?$")
_DMY = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_D_MON_Y = re.compile(r"^(\d{1,2})-([A-Za-z]{3})-(\d{4})$")
_EPOCH = re.compile(r"^\d{9,11}$")

_MONTHS = {"jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
           "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12}


def _safe_date(year: int, month: int, day: int) -> datetime.date | None:
    try:
        return datetime.date(year, month, day)
    except ValueError:
        return None


def parse_date_value(value) -> datetime.date | None:
    """Best-effort conversion of one cell to a calendar date.

    Returns None for anything unparseable; never raises on data.
    """
    if value is None:
        return None
    if isinstance(value, datetime.datetime):
        return value.date()
    if isinstance(value, datetime.date):
        return value
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return _from_epoch(value)
    if isinstance(value, float):
        return _from_epoch(int(value)) if value == int(value) else None
    if not isinstance(value, str):
        return None
    text = value.strip()
    if not text:
        return None
    m = _ISO_DATE.match(text) or _ISO_DATETIME.match(text)
    if m:
        return _safe_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _DMY.match(text)
    if m:
        return _safe_date(int(m.group(3)), int(m.group(2)), int(m.group(1)))
    m = _D_MON_Y.match(text)
    if m:
        month = _MONTHS.get(m.group(2).lower())
        if month is None:
            return None
        return _safe_date(int(m.group(3)), month, int(m.group(1)))
    if _EPOCH.match(text):
        return _from_epoch(int(text))
    return None


def _from_epoch(seconds: int) -> datetime.date | None:
    # 9..11 digit range keeps us between 1973 and 5138; anything outside
    # that is far more likely a stray identifier than a timestamp.
    if not 10 ** 8 <= seconds < 10 ** 12:
        return None
    try:
        return datetime.datetime.fromtimestamp(
            seconds, tz=datetime.timezone.utc).date()
    except (ValueError, OSError, OverflowError):
        return None
