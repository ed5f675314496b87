"""Series, quality and breakdown computation over typed tables.

Record identity is positional (row index), which makes selections cheap to
pass around and compare.  The per-record inner loops run through the
kernel dispatch so the compiled extension carries the hot paths when it is
available.
"""

from __future__ import annotations

import datetime
import threading
import weakref
from bisect import bisect_right
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from ..data.table import DataTable
from ..mss import MeasureSpec, MetricSpec, _values_equal
from . import _kernels
from .binning import Timeframe, bin_edges_ordinals, bin_label, bin_starts, next_bin

Number = int | float


@dataclass(frozen=True)
class BinSeries:
    measure: str
    granularity: str
    bins: tuple[datetime.date, ...]
    values: tuple[Optional[Number], ...]

    def labels(self) -> list[str]:
        return [bin_label(b, self.granularity) for b in self.bins]

    def to_json(self) -> dict:
        return {
            "measure": self.measure,
            "granularity": self.granularity,
            "bins": [b.isoformat() for b in self.bins],
            "labels": self.labels(),
            "values": list(self.values),
        }


@dataclass(frozen=True)
class FieldQuality:
    missing: int
    invalid: int
    valid: int

    @property
    def total(self) -> int:
        return self.missing + self.invalid + self.valid

    def to_json(self) -> dict:
        return {"missing": self.missing, "invalid": self.invalid,
                "valid": self.valid, "total": self.total}


@dataclass(frozen=True)
class QualityStats:
    per_field: Mapping[str, FieldQuality]
    metric_total: int

    def summary_line(self) -> str:
        miss = sum(q.missing for q in self.per_field.values())
        inval = sum(q.invalid for q in self.per_field.values())
        return (f"{miss} missing / {inval} invalid values out of "
                f"{self.metric_total} records")

    def to_json(self) -> dict:
        return {
            "metric_total": self.metric_total,
            "summary": self.summary_line(),
            "fields": {f: q.to_json() for f, q in self.per_field.items()},
        }


def value_label(value: Any) -> str:
    if value is None:
        return "(missing)"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, datetime.date):
        return value.isoformat()
    return str(value)


@dataclass(frozen=True)
class DistributionEntry:
    value: Any
    count: int
    share: float

    def to_json(self) -> dict:
        return {"value": self.value, "label": value_label(self.value),
                "count": self.count, "share": self.share}


@dataclass(frozen=True)
class Distribution:
    field: str
    entries: tuple[DistributionEntry, ...]
    total: int

    def to_json(self) -> dict:
        return {"field": self.field, "total": self.total,
                "entries": [e.to_json() for e in self.entries]}


@dataclass(frozen=True)
class Selection:
    """What the user has brushed: any combination of time bins, one category
    value and an explicit record id set.  Present parts compose with AND."""

    bins: Optional[tuple[datetime.date, ...]] = None
    granularity: Optional[str] = None
    category_field: Optional[str] = None
    category_value: Any = None
    has_category: bool = False
    record_ids: Optional[tuple[int, ...]] = None

    @property
    def is_empty(self) -> bool:
        return (not self.bins and not self.has_category
                and self.record_ids is None)

    @classmethod
    def time_bins(cls, bins: Sequence[datetime.date],
                  granularity: str) -> "Selection":
        return cls(bins=tuple(bins), granularity=granularity)

    @classmethod
    def category(cls, field: str, value: Any) -> "Selection":
        return cls(category_field=field, category_value=value,
                   has_category=True)

    @classmethod
    def records(cls, ids: Sequence[int]) -> "Selection":
        return cls(record_ids=tuple(ids))

    def with_time_bins(self, bins, granularity) -> "Selection":
        return Selection(bins=tuple(bins) if bins else None,
                         granularity=granularity if bins else None,
                         category_field=self.category_field,
                         category_value=self.category_value,
                         has_category=self.has_category,
                         record_ids=self.record_ids)

    def with_category(self, field, value) -> "Selection":
        return Selection(bins=self.bins, granularity=self.granularity,
                         category_field=field, category_value=value,
                         has_category=field is not None,
                         record_ids=self.record_ids)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {}
        if self.bins:
            doc["bins"] = [b.isoformat() for b in self.bins]
            doc["granularity"] = self.granularity
        if self.has_category:
            doc["category"] = {"field": self.category_field,
                               "value": self.category_value}
        if self.record_ids is not None:
            doc["record_ids"] = list(self.record_ids)
        return doc


# ---------------------------------------------------------------------------
# Record filtering

def _passes_filters(row: Mapping, measure: MeasureSpec) -> bool:
    if measure.where:
        if measure.effective_operator == "and":
            ok = all(c.predicate.matches(row.get(c.field))
                     for c in measure.where)
        else:
            ok = any(c.predicate.matches(row.get(c.field))
                     for c in measure.where)
        if not ok:
            return False
    for fname, allowed in measure.valid.items():
        v = row.get(fname)
        if v is None:
            return False
        if not any(_values_equal(v, a) for a in allowed):
            return False
    return True


# A card build asks for the same measure's records many times over (main
# series, each tab, every context year), and a served table never changes,
# so the predicate pass is memoized per table.  The expensive part (where/
# operator/valid evaluation) is timeframe independent; per-timeframe
# restriction is a cheap ordinal range check over the surviving ids.
# Entries die with their table via weakref.finalize.

_MEMO_LOCK = threading.Lock()
_TABLE_MEMO: dict[int, "_TableMemo"] = {}

_BASE_CAP = 32
_RANGE_CAP = 64


class _TableMemo:
    __slots__ = ("base", "ranges")

    def __init__(self):
        self.base: dict = {}
        self.ranges: dict = {}


def _memo_for(table: DataTable) -> Optional[_TableMemo]:
    key = id(table)
    with _MEMO_LOCK:
        memo = _TABLE_MEMO.get(key)
        if memo is None:
            try:
                weakref.finalize(table, _TABLE_MEMO.pop, key, None)
            except TypeError:
                return None
            memo = _TableMemo()
            _TABLE_MEMO[key] = memo
        return memo


def _measure_sig(measure: MeasureSpec) -> Optional[tuple]:
    """Hashable identity of a measure's record filter, or None when some
    predicate literal is unhashable (then callers just scan)."""
    sig = (measure.where, measure.effective_operator,
           tuple(sorted(measure.valid.items())),
           measure.start, measure.end)
    try:
        hash(sig)
    except TypeError:
        return None
    return sig


def _memo_put(slot: dict, key, value, cap: int):
    with _MEMO_LOCK:
        slot[key] = value
        while len(slot) > cap:
            slot.pop(next(iter(slot)))


def _point_base(table: DataTable, measure: MeasureSpec, sig: tuple,
                memo: _TableMemo, xfield: str) -> tuple[tuple, tuple]:
    """(ids, ordinals) of records passing the measure's filters; ordinal is
    -1 when the xfield is missing or not a date."""
    key = ("pt", sig, xfield)
    hit = memo.base.get(key)
    if hit is None:
        ids, ords = [], []
        for i, row in enumerate(table.rows):
            if _passes_filters(row, measure):
                ids.append(i)
                x = row.get(xfield)
                ords.append(x.toordinal()
                            if isinstance(x, datetime.date) else -1)
        hit = (tuple(ids), tuple(ords))
        _memo_put(memo.base, key, hit, _BASE_CAP)
    return hit


def _interval_base(table: DataTable, measure: MeasureSpec, sig: tuple,
                   memo: _TableMemo) -> tuple[tuple, tuple, tuple]:
    """(ids, start ordinals, end ordinals) of filter-passing records with
    both endpoints present and in order."""
    key = ("iv", sig)
    hit = memo.base.get(key)
    if hit is None:
        ids, s_ords, e_ords = [], [], []
        for i, row in enumerate(table.rows):
            s = row.get(measure.start)
            e = row.get(measure.end)
            if not isinstance(s, datetime.date) \
                    or not isinstance(e, datetime.date) or e < s:
                continue
            if _passes_filters(row, measure):
                ids.append(i)
                s_ords.append(s.toordinal())
                e_ords.append(e.toordinal())
        hit = (tuple(ids), tuple(s_ords), tuple(e_ords))
        _memo_put(memo.base, key, hit, _BASE_CAP)
    return hit


def filter_records(table: DataTable, measure: MeasureSpec,
                   timeframe: Optional[Timeframe],
                   xfield: str) -> list[int]:
    """Ids of records passing where/operator/valid, with the xfield inside
    the timeframe when one is given."""
    memo = _memo_for(table)
    sig = _measure_sig(measure) if memo is not None else None
    if sig is None:
        out = []
        start = timeframe.start if timeframe else None
        end = timeframe.end if timeframe else None
        for i, row in enumerate(table.rows):
            if timeframe is not None:
                x = row.get(xfield)
                if not isinstance(x, datetime.date) or not start <= x <= end:
                    continue
            if _passes_filters(row, measure):
                out.append(i)
        return out
    ids, ords = _point_base(table, measure, sig, memo, xfield)
    if timeframe is None:
        return list(ids)
    lo = timeframe.start.toordinal()
    hi = timeframe.end.toordinal()
    rkey = ("pt", sig, xfield, lo, hi)
    hit = memo.ranges.get(rkey)
    if hit is None:
        hit = tuple(i for i, o in zip(ids, ords) if lo <= o <= hi)
        _memo_put(memo.ranges, rkey, hit, _RANGE_CAP)
    return list(hit)


def _interval_member_ids(table: DataTable, measure: MeasureSpec,
                         timeframe: Timeframe) -> list[int]:
    """Ids whose clipped [start, end) interval is non-empty in the timeframe.

    Records with a missing endpoint or end before start contribute nothing;
    the quality statistics account for them.
    """
    lo = timeframe.start.toordinal()
    hi = timeframe.end.toordinal() + 1
    memo = _memo_for(table)
    sig = _measure_sig(measure) if memo is not None else None
    if sig is None:
        out = []
        for i, row in enumerate(table.rows):
            s = row.get(measure.start)
            e = row.get(measure.end)
            if not isinstance(s, datetime.date) \
                    or not isinstance(e, datetime.date):
                continue
            if e < s:
                continue
            if max(s.toordinal(), lo) < min(e.toordinal(), hi) \
                    and _passes_filters(row, measure):
                out.append(i)
        return out
    ids, s_ords, e_ords = _interval_base(table, measure, sig, memo)
    rkey = ("iv", sig, lo, hi)
    hit = memo.ranges.get(rkey)
    if hit is None:
        hit = tuple(i for i, s, e in zip(ids, s_ords, e_ords)
                    if max(s, lo) < min(e, hi))
        _memo_put(memo.ranges, rkey, hit, _RANGE_CAP)
    return list(hit)


def measure_memberships(table: DataTable, spec: MetricSpec,
                        timeframe: Timeframe,
                        xfield: str) -> list[list[int]]:
    """Per declared measure, the ids it admits inside the timeframe."""
    out = []
    for m in spec.measures:
        if m.is_interval:
            out.append(_interval_member_ids(table, m, timeframe))
        else:
            out.append(filter_records(table, m, timeframe, xfield))
    return out


def cohort_ids(table: DataTable, spec: MetricSpec, timeframe: Timeframe,
               xfield: str) -> list[int]:
    """Union of the measures' record sets: the records the card is about."""
    seen: set[int] = set()
    for ids in measure_memberships(table, spec, timeframe, xfield):
        seen.update(ids)
    return sorted(seen)


# ---------------------------------------------------------------------------
# Series

def _xfield_ordinals(table: DataTable, ids: Sequence[int],
                     xfield: str) -> list[int]:
    rows = table.rows
    out = []
    for i in ids:
        x = rows[i].get(xfield)
        if isinstance(x, datetime.date):
            out.append(x.toordinal())
    return out


def apply_running(series: BinSeries, kind: str,
                  record_values: Optional[Sequence[Sequence[float]]] = None
                  ) -> BinSeries:
    """Turn a per-bin base series into its running variant.

    runningSum: prefix sums of the base values, Absent read as 0.
    runningAverage: record-weighted cumulative mean of ``record_values``
    (one multiset per bin); Absent until the first contributing record,
    then carried forward.
    """
    if kind == "runningSum":
        acc: Number = 0
        values: list[Optional[Number]] = []
        for v in series.values:
            acc += v or 0
            values.append(acc)
        return BinSeries(series.measure, series.granularity, series.bins,
                         tuple(values))
    if kind == "runningAverage":
        if record_values is None:
            raise ValueError("runningAverage needs per-bin record values")
        count = 0
        total = 0.0
        values = []
        for bucket in record_values:
            count += len(bucket)
            total += sum(bucket)
            values.append(total / count if count else None)
        return BinSeries(series.measure, series.granularity, series.bins,
                         tuple(values))
    raise ValueError(f"not a running rule: {kind!r}")


def measure_series(table: DataTable, measure: MeasureSpec, rule: str,
                   xfield: str, granularity: str,
                   timeframe: Timeframe) -> BinSeries:
    """Aggregate one point measure into per-bin values under a rule.

    Bins with no records: count and sum read 0, average is Absent (None).
    Running rules accumulate left to right across the timeframe.
    """
    starts = bin_starts(timeframe, granularity)
    edges = bin_edges_ordinals(timeframe, granularity)
    ids = filter_records(table, measure, timeframe, xfield)
    rows = table.rows

    if rule == "count" or (rule == "runningSum" and measure.field_name is None):
        counts = _kernels.count_by_bin(_xfield_ordinals(table, ids, xfield),
                                       edges)
        base = BinSeries(measure.name, granularity, tuple(starts),
                         tuple(counts))
        if rule == "count":
            return base
        return apply_running(base, "runningSum")

    field_name = measure.field_name
    if field_name is None:
        raise ValueError(f"rule {rule!r} needs a value field on "
                         f"measure {measure.name!r}")

    if rule == "runningAverage":
        # Per-bin multisets drive the record-weighted cumulative mean.
        n = len(starts)
        buckets: list[list[float]] = [[] for _ in range(n)]
        for i in ids:
            row = rows[i]
            v = row.get(field_name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                continue
            x = row.get(xfield)
            k = _bin_index(edges, x.toordinal())
            if k is not None:
                buckets[k].append(float(v))
        empty = BinSeries(measure.name, granularity, tuple(starts),
                          (None,) * n)
        return apply_running(empty, "runningAverage", buckets)

    days = []
    values = []
    for i in ids:
        row = rows[i]
        v = row.get(field_name)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            continue
        days.append(row[xfield].toordinal())
        values.append(float(v))
    sums, counts = _kernels.sum_by_bin(days, values, edges)
    if rule == "sum":
        out = tuple(sums)
    elif rule == "average":
        out = tuple(s / c if c else None for s, c in zip(sums, counts))
    elif rule == "runningSum":
        base = BinSeries(measure.name, granularity, tuple(starts),
                         tuple(sums))
        return apply_running(base, "runningSum")
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return BinSeries(measure.name, granularity, tuple(starts), out)


def _bin_index(edges: Sequence[int], ordinal: int) -> Optional[int]:
    if not edges or not edges[0] <= ordinal < edges[-1]:
        return None
    return bisect_right(edges, ordinal) - 1


def interval_series(table: DataTable, start_field: str, end_field: str,
                    granularity: str, timeframe: Timeframe,
                    measure_name: str = "", rule: str = "sum",
                    ids: Optional[Sequence[int]] = None) -> BinSeries:
    """Per-bin occupied days (rule sum) or active records (rule count) for
    half-open [start, end) day intervals clipped to the timeframe.

    Eligibility is independent of the xfield: a record contributes wherever
    its interval overlaps a bin.  Missing endpoints and end < start
    contribute nothing.
    """
    starts_list = bin_starts(timeframe, granularity)
    edges = bin_edges_ordinals(timeframe, granularity)
    rows = table.rows
    id_iter = range(len(rows)) if ids is None else ids
    s_ords: list[int] = []
    e_ords: list[int] = []
    for i in id_iter:
        row = rows[i]
        s = row.get(start_field)
        e = row.get(end_field)
        if not isinstance(s, datetime.date) or not isinstance(e, datetime.date):
            continue
        if e < s:
            continue
        s_ords.append(s.toordinal())
        e_ords.append(e.toordinal())
    if rule == "sum":
        values = _kernels.interval_days_by_bin(s_ords, e_ords, edges)
    elif rule == "count":
        values = _interval_records_by_bin(s_ords, e_ords, edges)
    else:
        raise ValueError(f"interval measures cannot use rule {rule!r}")
    return BinSeries(measure_name or start_field, granularity,
                     tuple(starts_list), tuple(values))


def _interval_records_by_bin(s_ords, e_ords, edges) -> list[int]:
    # Cold path: number of records whose clipped interval touches each bin.
    n = len(edges) - 1
    counts = [0] * n
    if n < 1:
        return []
    lo, hi = edges[0], edges[-1]
    for s, e in zip(s_ords, e_ords):
        cs = max(s, lo)
        ce = min(e, hi)
        if ce <= cs:
            continue
        i = bisect_right(edges, cs) - 1
        while i < n and edges[i] < ce:
            counts[i] += 1
            i += 1
    return counts


def series_for_measure(table: DataTable, spec: MetricSpec, measure_name: str,
                       xfield: str, granularity: str, timeframe: Timeframe,
                       rule: Optional[str] = None) -> BinSeries:
    """Route one measure to the right series computation under its rule."""
    measure = spec.measure(measure_name)
    rule = rule or spec.rule_for(measure_name)
    if rule is None:
        raise ValueError(f"measure {measure_name!r} has no aggregation rule")
    if measure.is_interval:
        ids = None
        if measure.where or measure.valid:
            ids = [i for i, row in enumerate(table.rows)
                   if _passes_filters(row, measure)]
        return interval_series(table, measure.start, measure.end, granularity,
                               timeframe, measure_name=measure_name,
                               rule=rule, ids=ids)
    return measure_series(table, measure, rule, xfield, granularity, timeframe)


# ---------------------------------------------------------------------------
# Quality

def quality_stats(table: DataTable, spec: MetricSpec, timeframe: Timeframe,
                  xfield: str) -> QualityStats:
    """Missing/invalid/valid accounting for every field the metric reads.

    Scope is the records whose xfield lies in the timeframe.  Each record
    is classified exactly once per field: Missing wins, then failing every
    valid list that mentions the field, then an end-before-start interval
    (charged to the start field), otherwise valid.
    """
    fields = spec.referenced_fields()
    allowed: dict[str, set] = {}
    for m in spec.measures:
        for fname, values in m.valid.items():
            allowed.setdefault(fname, set())
            allowed[fname].update(values)
    interval_pairs = [(m.start, m.end) for m in spec.measures if m.is_interval]
    rows = [row for row in table.rows
            if isinstance(row.get(xfield), datetime.date)
            and row[xfield] in timeframe]
    per_field: dict[str, FieldQuality] = {}
    for f in fields:
        miss = inval = valid = 0
        pair_ends = [e for s, e in interval_pairs if s == f]
        for row in rows:
            v = row.get(f)
            if v is None:
                miss += 1
                continue
            if f in allowed and not any(_values_equal(v, a)
                                        for a in allowed[f]):
                inval += 1
                continue
            bad_interval = False
            if pair_ends and isinstance(v, datetime.date):
                for end_field in pair_ends:
                    e = row.get(end_field)
                    if isinstance(e, datetime.date) and e < v:
                        bad_interval = True
                        break
            if bad_interval:
                inval += 1
            else:
                valid += 1
        per_field[f] = FieldQuality(missing=miss, invalid=inval, valid=valid)
    return QualityStats(per_field=per_field, metric_total=len(rows))


# ---------------------------------------------------------------------------
# Selections and breakdowns

def _bin_ranges(selection: Selection,
                timeframe: Timeframe) -> list[tuple[int, int]]:
    """Selected bins as clipped half-open ordinal ranges."""
    if not selection.bins:
        return []
    gran = selection.granularity or "month"
    lo = timeframe.start.toordinal()
    hi = timeframe.end.toordinal() + 1
    ranges = []
    for b in selection.bins:
        r_lo = max(b.toordinal(), lo)
        r_hi = min(next_bin(b, gran).toordinal(), hi)
        if r_lo < r_hi:
            ranges.append((r_lo, r_hi))
    return ranges


def _row_in_ranges(ordinal: int, ranges: list[tuple[int, int]]) -> bool:
    return any(lo <= ordinal < hi for lo, hi in ranges)


def _interval_hits_ranges(row: Mapping, measure: MeasureSpec,
                          ranges: list[tuple[int, int]]) -> bool:
    s = row.get(measure.start)
    e = row.get(measure.end)
    if not isinstance(s, datetime.date) or not isinstance(e, datetime.date):
        return False
    if e < s:
        return False
    so, eo = s.toordinal(), e.toordinal()
    return any(max(so, lo) < min(eo, hi) for lo, hi in ranges)


def restrict_cohort(table: DataTable, spec: MetricSpec, timeframe: Timeframe,
                    xfield: str, selection: Optional[Selection]
                    ) -> tuple[list[int], list[list[int]]]:
    """Apply a selection to the card's cohort.

    Returns (restricted cohort ids, per-measure restricted ids).  The parts
    of the selection compose conjunctively, so brushing time then category
    lands on the same records as category then time.
    """
    memberships = measure_memberships(table, spec, timeframe, xfield)
    if selection is None or selection.is_empty:
        cohort = sorted(set().union(*memberships)) if memberships else []
        return cohort, memberships
    rows = table.rows
    ranges = _bin_ranges(selection, timeframe)
    id_set = set(selection.record_ids) if selection.record_ids is not None \
        else None

    def keep(i: int, measure: MeasureSpec) -> bool:
        row = rows[i]
        if selection.bins:
            if measure.is_interval:
                if not _interval_hits_ranges(row, measure, ranges):
                    return False
            else:
                x = row.get(xfield)
                if not isinstance(x, datetime.date) \
                        or not _row_in_ranges(x.toordinal(), ranges):
                    return False
        if selection.has_category:
            v = row.get(selection.category_field)
            want = selection.category_value
            if want is None:
                if v is not None:
                    return False
            elif v is None or not _values_equal(v, want):
                return False
        if id_set is not None and i not in id_set:
            return False
        return True

    restricted = [[i for i in ids if keep(i, m)]
                  for m, ids in zip(spec.measures, memberships)]
    cohort = sorted(set().union(*restricted)) if restricted else []
    return cohort, restricted


def breakdown(table: DataTable, spec: MetricSpec, category_field: str,
              timeframe: Timeframe, xfield: str,
              selection: Optional[Selection] = None) -> Distribution:
    """Distribution of a category over the (possibly brushed) cohort.

    Entries are sorted by count descending, ties lexicographic on the
    display label; shares are counts over the cohort size.
    """
    cohort, _ = restrict_cohort(table, spec, timeframe, xfield, selection)
    counts: dict[Any, int] = {}
    rows = table.rows
    for i in cohort:
        v = rows[i].get(category_field)
        key = v if not isinstance(v, float) or v == v else None
        counts[key] = counts.get(key, 0) + 1
    total = len(cohort)
    entries = sorted(counts.items(),
                     key=lambda kv: (-kv[1], value_label(kv[0])))
    dist = tuple(DistributionEntry(value=v, count=c,
                                   share=(c / total if total else 0.0))
                 for v, c in entries)
    return Distribution(field=category_field, entries=dist, total=total)


def overlay_series(table: DataTable, spec: MetricSpec, timeframe: Timeframe,
                   xfield: str, granularity: str,
                   selection: Selection) -> BinSeries:
    """Per-bin record counts of the selected cohort, for drawing on top of
    the main chart after a category brush."""
    cohort, _ = restrict_cohort(table, spec, timeframe, xfield, selection)
    starts = bin_starts(timeframe, granularity)
    edges = bin_edges_ordinals(timeframe, granularity)
    counts = _kernels.count_by_bin(_xfield_ordinals(table, cohort, xfield),
                                   edges)
    return BinSeries("selection", granularity, tuple(starts), tuple(counts))


# ---------------------------------------------------------------------------
# Yearly context

def yearly_context(table: DataTable, spec: MetricSpec, measure_name: str,
                   xfield: str, granularity: str, tspan: int,
                   anchor_year: int) -> list[BinSeries]:
    """One full-calendar-year series per context year, oldest first.

    Covers the anchor year and the tspan - 1 years before it, each binned
    over its entire year so the same bins line up across series.
    """
    out = []
    for year in range(anchor_year - tspan + 1, anchor_year + 1):
        tf = Timeframe.year(year)
        out.append(series_for_measure(table, spec, measure_name, xfield,
                                      granularity, tf))
    return out
