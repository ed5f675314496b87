"""Calendar-aligned time bins.

A timeframe is an inclusive [start, end] day range.  Bins at a granularity
are calendar-aligned: months start on the 1st, quarters on Jan/Apr/Jul/Oct 1,
years on Jan 1.  The first and last bins are clipped to the timeframe, so
edge ordinals always cover exactly the requested days.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

GRANULARITIES = ("day", "month", "quarter", "year")


@dataclass(frozen=True)
class Timeframe:
    start: datetime.date
    end: datetime.date

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"timeframe start {self.start} is after "
                             f"end {self.end}")

    def __contains__(self, day: datetime.date) -> bool:
        return self.start <= day <= self.end

    @classmethod
    def year(cls, y: int) -> "Timeframe":
        return cls(datetime.date(y, 1, 1), datetime.date(y, 12, 31))


def bin_floor(day: datetime.date, granularity: str) -> datetime.date:
    if granularity == "day":
        return day
    if granularity == "month":
        return day.replace(day=1)
    if granularity == "quarter":
        month = day.month - (day.month - 1) % 3
        return datetime.date(day.year, month, 1)
    if granularity == "year":
        return datetime.date(day.year, 1, 1)
    raise ValueError(f"unknown granularity {granularity!r}")


def next_bin(bin_start: datetime.date, granularity: str) -> datetime.date:
    if granularity == "day":
        return bin_start + datetime.timedelta(days=1)
    if granularity == "month":
        months = 1
    elif granularity == "quarter":
        months = 3
    elif granularity == "year":
        months = 12
    else:
        raise ValueError(f"unknown granularity {granularity!r}")
    month0 = bin_start.month - 1 + months
    return datetime.date(bin_start.year + month0 // 12, month0 % 12 + 1, 1)


def bin_starts(timeframe: Timeframe, granularity: str) -> list[datetime.date]:
    starts = []
    cursor = bin_floor(timeframe.start, granularity)
    while cursor <= timeframe.end:
        starts.append(cursor)
        cursor = next_bin(cursor, granularity)
    return starts


def bin_label(bin_start: datetime.date, granularity: str) -> str:
    if granularity == "day":
        return bin_start.isoformat()
    if granularity == "month":
        return f"{bin_start.year:04d}-{bin_start.month:02d}"
    if granularity == "quarter":
        return f"{bin_start.year:04d}-Q{(bin_start.month - 1) // 3 + 1}"
    if granularity == "year":
        return f"{bin_start.year:04d}"
    raise ValueError(f"unknown granularity {granularity!r}")


def bin_edges_ordinals(timeframe: Timeframe, granularity: str) -> list[int]:
    """Half-open bin edges as proleptic day ordinals.

    edges[0] is the timeframe start (not the calendar bin start) and
    edges[-1] is the day after the timeframe end, so a day d lands in bin i
    iff edges[i] <= d.toordinal() < edges[i+1].  Days outside the timeframe
    fall off either end.
    """
    starts = bin_starts(timeframe, granularity)
    edges = [timeframe.start.toordinal()]
    for s in starts[1:]:
        edges.append(s.toordinal())
    edges.append(timeframe.end.toordinal() + 1)
    return edges
