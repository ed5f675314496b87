"""Card view models: everything a renderer needs, nothing it has to compute.

A card is one metric bound to one table and timeframe.  The entry state
carries the main measures only; the expanded state adds the subsidiary
views (category pies, quantity tabs, yearly time context).  Brushes come
back here to be resolved into linked updates against the same bound data.
"""

from __future__ import annotations

import csv
import datetime
import io
from dataclasses import dataclass, field as dc_field
from typing import Any, Mapping, Optional, Sequence

from .aggregate.binning import Timeframe, bin_edges_ordinals, bin_starts
from .aggregate.engine import (BinSeries, Distribution, QualityStats,
                               Selection, _bin_index, _kernels,
                               apply_running, breakdown, cohort_ids,
                               measure_memberships, overlay_series,
                               quality_stats, restrict_cohort,
                               series_for_measure, yearly_context)
from .data.table import DataTable, _format_cell
from .mss import (DEFAULT_GRANULARITY, EventSpec, MetricSpec)

ENTRY = "entry"
EXPANDED = "expanded"

# Palette slots: main measures take 0..4, quantity tabs 5..9, so the two
# families never share a colour on screen.
QUANTITY_PALETTE_BASE = 5


class CardError(Exception):
    pass


class EmptySelectionError(CardError):
    pass


@dataclass(frozen=True)
class EncodingGroup:
    kind: str
    measures: tuple[str, ...]
    mark: str
    axis: int

    def to_json(self) -> dict:
        return {"kind": self.kind, "measures": list(self.measures),
                "mark": self.mark, "axis": self.axis}


@dataclass(frozen=True)
class EncodingPlan:
    groups: tuple[EncodingGroup, ...]
    palette: Mapping[str, int]
    chart: str

    def to_json(self) -> dict:
        return {"groups": [g.to_json() for g in self.groups],
                "palette": dict(self.palette), "chart": self.chart}


def plan_encoding(spec: MetricSpec) -> EncodingPlan:
    """Group measures by rule kind, in declaration order.

    The first kind keeps the metric's mark on the left axis; a second kind
    renders as a line on the right axis.  Palette indices follow measure
    declaration order.
    """
    kinds: list[str] = []
    for name in spec.measure_names():
        rule = spec.rule_for(name)
        if rule is not None and rule not in kinds:
            kinds.append(rule)
    if len(kinds) > 2:
        raise CardError(f"metric {spec.metric!r} mixes {len(kinds)} rule kinds")
    groups = []
    for axis, kind in enumerate(kinds):
        members = tuple(n for n in spec.measure_names()
                        if spec.rule_for(n) == kind)
        mark = spec.effective_mark if axis == 0 else "line"
        groups.append(EncodingGroup(kind=kind, measures=members, mark=mark,
                                    axis=axis))
    palette = {name: i for i, name in enumerate(spec.measure_names())}
    return EncodingPlan(groups=tuple(groups), palette=palette,
                        chart=spec.effective_chart)


@dataclass(frozen=True)
class EventInstance:
    name: str
    date: datetime.date
    desc: str
    id: Any

    def line(self) -> str:
        text = f"Latest {self.name}: {self.date.isoformat()}"
        if self.id is not None:
            text += f" (record {self.id})"
        if self.desc:
            text += f". {self.desc}"
        return text

    def to_json(self) -> dict:
        return {"name": self.name, "date": self.date.isoformat(),
                "desc": self.desc, "id": self.id}


def latest_event(table: DataTable, event: EventSpec) -> Optional[EventInstance]:
    """The most recent occurrence; date ties break towards the larger id
    (lexicographic), so the answer never depends on row order."""
    best: Optional[tuple[datetime.date, str, Any]] = None
    for i, row in enumerate(table.rows):
        when = row.get(event.date_field)
        if not isinstance(when, datetime.date):
            continue
        ident = row.get(event.id_field) if event.id_field else i
        key = (when, "" if ident is None else str(ident))
        if best is None or key > (best[0], best[1]):
            best = (key[0], key[1], ident)
    if best is None:
        return None
    return EventInstance(name=event.name, date=best[0], desc=event.desc,
                         id=best[2])


@dataclass(frozen=True)
class CategoryTab:
    field: str
    distribution: Distribution

    def to_json(self) -> dict:
        return {"field": self.field, "distribution": self.distribution.to_json()}


@dataclass(frozen=True)
class QuantityTab:
    field: str
    aggregate: str
    palette: int
    series: BinSeries

    def to_json(self) -> dict:
        return {"field": self.field, "aggregate": self.aggregate,
                "palette": self.palette, "series": self.series.to_json()}


@dataclass(frozen=True)
class TimesTab:
    granularity: str
    measures: Mapping[str, tuple[BinSeries, ...]]

    def to_json(self) -> dict:
        return {"granularity": self.granularity,
                "measures": {name: [s.to_json() for s in series]
                             for name, series in self.measures.items()}}


@dataclass(frozen=True)
class CardViewModel:
    metric: str
    state: str
    granularity: str
    series: tuple[BinSeries, ...]
    encoding: EncodingPlan
    quality: QualityStats
    selection_info: Mapping[str, Mapping[str, int]]
    description: str
    ylabel: Optional[str]
    legend: Optional[tuple[str, ...]]
    event: Optional[EventInstance]
    categories: tuple[CategoryTab, ...] = ()
    quantities: tuple[QuantityTab, ...] = ()
    times: tuple[TimesTab, ...] = ()
    default_times_granularity: Optional[str] = None
    tspan: int = 3
    # Bound context so brushes resolve against exactly what was built.
    _table: Optional[DataTable] = dc_field(default=None, repr=False,
                                           compare=False)
    _spec: Optional[MetricSpec] = dc_field(default=None, repr=False,
                                           compare=False)
    _timeframe: Optional[Timeframe] = dc_field(default=None, repr=False,
                                               compare=False)
    _xfield: Optional[str] = dc_field(default=None, repr=False, compare=False)

    @property
    def bins(self) -> tuple[datetime.date, ...]:
        return self.series[0].bins if self.series else ()

    def to_payload(self) -> dict:
        doc: dict[str, Any] = {
            "metric": self.metric,
            "state": self.state,
            "granularity": self.granularity,
            "description": self.description,
            "ylabel": self.ylabel,
            "legend": list(self.legend) if self.legend is not None else None,
            "main": {
                "series": [s.to_json() for s in self.series],
                "encoding": self.encoding.to_json(),
                "quality": self.quality.to_json(),
            },
            "selection_info": {m: dict(v)
                               for m, v in self.selection_info.items()},
            "event": self.event.to_json() if self.event else None,
        }
        if self.state == EXPANDED:
            doc["tabs"] = {
                "categories": [t.to_json() for t in self.categories],
                "quantities": [t.to_json() for t in self.quantities],
                "times": {
                    "default": self.default_times_granularity,
                    "tspan": self.tspan,
                    "granularities": [t.to_json() for t in self.times],
                },
            }
        return doc


def _quantity_series(table: DataTable, ids: Sequence[int], field: str,
                     rule: str, xfield: str, granularity: str,
                     timeframe: Timeframe) -> BinSeries:
    """Aggregate one quantity field over the card's cohort, binned by the
    xfield.  Cohort rows without an xfield date cannot be placed in a bin
    and are left out."""
    starts = bin_starts(timeframe, granularity)
    edges = bin_edges_ordinals(timeframe, granularity)
    rows = table.rows
    days: list[int] = []
    values: list[float] = []
    for i in ids:
        x = rows[i].get(xfield)
        if not isinstance(x, datetime.date) or x not in timeframe:
            continue
        v = rows[i].get(field)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            continue
        days.append(x.toordinal())
        values.append(float(v))
    name = field
    if rule == "count":
        counts = _kernels.count_by_bin(days, edges)
        return BinSeries(name, granularity, tuple(starts), tuple(counts))
    sums, counts = _kernels.sum_by_bin(days, values, edges)
    if rule == "sum":
        return BinSeries(name, granularity, tuple(starts), tuple(sums))
    if rule == "average":
        vals = tuple(s / c if c else None for s, c in zip(sums, counts))
        return BinSeries(name, granularity, tuple(starts), vals)
    if rule == "runningSum":
        base = BinSeries(name, granularity, tuple(starts), tuple(sums))
        return apply_running(base, "runningSum")
    if rule == "runningAverage":
        buckets: list[list[float]] = [[] for _ in starts]
        for d, v in zip(days, values):
            k = _bin_index(edges, d)
            if k is not None:
                buckets[k].append(v)
        empty = BinSeries(name, granularity, tuple(starts),
                          (None,) * len(starts))
        return apply_running(empty, "runningAverage", buckets)
    raise CardError(f"unknown quantity aggregate {rule!r}")


def build_card(spec: MetricSpec, table: DataTable, timeframe: Timeframe,
               state: str, xfield: str) -> CardViewModel:
    """Assemble the view model for one metric at entry or expanded state."""
    if state not in (ENTRY, EXPANDED):
        raise CardError(f"unknown card state {state!r}")
    sub = spec.subsidiary
    granularity = sub.default_granularity or DEFAULT_GRANULARITY
    series = tuple(series_for_measure(table, spec, name, xfield, granularity,
                                      timeframe)
                   for name in spec.measure_names())
    encoding = plan_encoding(spec)
    quality = quality_stats(table, spec, timeframe, xfield)
    memberships = measure_memberships(table, spec, timeframe, xfield)
    selection_info = {name: {"selected": 0, "total": len(ids)}
                      for name, ids in zip(spec.measure_names(), memberships)}
    event = latest_event(table, spec.event) if spec.event else None
    parts = []
    if spec.desc:
        parts.append(spec.desc)
    parts.append(quality.summary_line())
    if event:
        parts.append(event.line())
    description = "\n".join(parts)
    categories: tuple[CategoryTab, ...] = ()
    quantities: tuple[QuantityTab, ...] = ()
    times: tuple[TimesTab, ...] = ()
    default_times = None
    if state == EXPANDED:
        categories = tuple(
            CategoryTab(field=f,
                        distribution=breakdown(table, spec, f, timeframe,
                                               xfield))
            for f in sub.categories)
        cohort = cohort_ids(table, spec, timeframe, xfield)
        quantities = tuple(
            QuantityTab(field=q.field_name, aggregate=q.aggregate,
                        palette=QUANTITY_PALETTE_BASE + i,
                        series=_quantity_series(table, cohort, q.field_name,
                                                q.aggregate, xfield,
                                                granularity, timeframe))
            for i, q in enumerate(sub.quantities))
        times_map = sub.effective_times(spec.measure_names())
        default_times = next(iter(times_map)) if times_map else None
        anchor = timeframe.end.year
        times = tuple(
            TimesTab(granularity=gran,
                     measures={name: tuple(yearly_context(
                         table, spec, name, xfield, gran,
                         sub.effective_tspan, anchor))
                         for name in names})
            for gran, names in times_map.items())
    return CardViewModel(
        metric=spec.metric, state=state, granularity=granularity,
        series=series, encoding=encoding, quality=quality,
        selection_info=selection_info, description=description,
        ylabel=spec.ylabel, legend=spec.legend, event=event,
        categories=categories, quantities=quantities, times=times,
        default_times_granularity=default_times,
        tspan=sub.effective_tspan,
        _table=table, _spec=spec, _timeframe=timeframe, _xfield=xfield)


@dataclass(frozen=True)
class LinkedUpdate:
    """What changes elsewhere on the card when a selection lands."""

    selection: Selection
    distributions: tuple[CategoryTab, ...]
    overlay: Optional[BinSeries]
    highlight: tuple[bool, ...]
    selection_info: Mapping[str, Mapping[str, int]]
    cohort_size: int
    record_ids: tuple[int, ...]

    def to_payload(self) -> dict:
        return {
            "selection": self.selection.to_json(),
            "distributions": [t.to_json() for t in self.distributions],
            "overlay": self.overlay.to_json() if self.overlay else None,
            "highlight": list(self.highlight),
            "selection_info": {m: dict(v)
                               for m, v in self.selection_info.items()},
            "cohort_size": self.cohort_size,
        }


def _require_context(card: CardViewModel):
    if card._table is None or card._spec is None:
        raise CardError("card is not bound to data; build it with build_card")


def resolve_selection(card: CardViewModel, selection: Selection) -> LinkedUpdate:
    """Recompute the linked views for a selection.

    The selection parts compose with AND, so applying time and category in
    either order describes the same cohort.  An empty selection is a clear:
    full distributions, no overlay, nothing highlighted.
    """
    _require_context(card)
    table, spec = card._table, card._spec
    timeframe, xfield = card._timeframe, card._xfield
    cohort, per_measure = restrict_cohort(table, spec, timeframe, xfield,
                                          selection)
    distributions = tuple(
        CategoryTab(field=f,
                    distribution=breakdown(table, spec, f, timeframe, xfield,
                                           selection))
        for f in spec.subsidiary.categories)
    overlay = None
    if selection.has_category:
        overlay = overlay_series(table, spec, timeframe, xfield,
                                 card.granularity, selection)
    selected_bins = set(selection.bins or ())
    highlight = tuple(b in selected_bins for b in card.bins)
    names = spec.measure_names()
    totals = {name: card.selection_info[name]["total"] for name in names}
    if selection.is_empty:
        info = {name: {"selected": 0, "total": totals[name]}
                for name in names}
    else:
        info = {name: {"selected": len(ids), "total": totals[name]}
                for name, ids in zip(names, per_measure)}
    return LinkedUpdate(selection=selection, distributions=distributions,
                        overlay=overlay, highlight=highlight,
                        selection_info=info, cohort_size=len(cohort),
                        record_ids=tuple(cohort))


def resolve_time_brush(card: CardViewModel,
                       bins: Sequence[datetime.date]) -> LinkedUpdate:
    """Brush a set of the card's own time bins; empty clears."""
    if bins:
        selection = Selection.time_bins(bins, card.granularity)
    else:
        selection = Selection()
    return resolve_selection(card, selection)


def resolve_category_brush(card: CardViewModel, field: str,
                           value: Any) -> LinkedUpdate:
    """Brush one slice of a category pie."""
    return resolve_selection(card, Selection.category(field, value))


# ---------------------------------------------------------------------------
# Export

@dataclass(frozen=True)
class ExportTable:
    fields: tuple[str, ...]
    rows: tuple[tuple, ...]
    metadata: Mapping[str, Any]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.fields)
        for row in self.rows:
            writer.writerow([_format_cell(v) for v in row])
        return buf.getvalue()


def _export_fields(spec: MetricSpec, xfield: str) -> list[str]:
    fields = ["record_id", xfield]
    for f in spec.referenced_fields():
        if f not in fields:
            fields.append(f)
    for f in spec.subsidiary.categories:
        if f not in fields:
            fields.append(f)
    for q in spec.subsidiary.quantities:
        if q.field_name not in fields:
            fields.append(q.field_name)
    if spec.event:
        for f in (spec.event.date_field, spec.event.id_field):
            if f and f not in fields:
                fields.append(f)
    return fields


def export_selection(card: CardViewModel,
                     selection: Selection) -> ExportTable:
    """The selected records as a table: the fields this metric reads, one
    row per record, ordered by (xfield date, record id)."""
    _require_context(card)
    if selection is None or selection.is_empty:
        raise EmptySelectionError("nothing selected to export")
    table, spec = card._table, card._spec
    timeframe, xfield = card._timeframe, card._xfield
    cohort, _ = restrict_cohort(table, spec, timeframe, xfield, selection)
    fields = _export_fields(spec, xfield)
    rows_src = table.rows
    far_future = datetime.date.max

    def sort_key(i: int):
        x = rows_src[i].get(xfield)
        return (x if isinstance(x, datetime.date) else far_future, i)

    ordered = sorted(cohort, key=sort_key)
    out_rows = tuple(
        tuple(i if f == "record_id" else rows_src[i].get(f) for f in fields)
        for i in ordered)
    metadata = {
        "metric": spec.metric,
        "selection": selection.to_json(),
        "row_count": len(out_rows),
        "timeframe": {"from": timeframe.start.isoformat(),
                      "to": timeframe.end.isoformat()},
    }
    return ExportTable(fields=tuple(fields), rows=out_rows, metadata=metadata)


# ---------------------------------------------------------------------------
# Wire parsing

def parse_selection(doc: Any, default_granularity: str) -> Selection:
    """Selection from request JSON; raises ValueError on anything off."""
    if doc is None:
        return Selection()
    if not isinstance(doc, dict):
        raise ValueError("selection must be an object")
    known = {"bins", "granularity", "category", "record_ids"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown selection keys {sorted(unknown)!r}")
    bins = None
    granularity = None
    if "bins" in doc:
        raw_bins = doc["bins"]
        if not isinstance(raw_bins, list):
            raise ValueError("'bins' must be a list of ISO dates")
        parsed = []
        for b in raw_bins:
            try:
                parsed.append(datetime.date.fromisoformat(b))
            except (TypeError, ValueError):
                raise ValueError(f"bad bin date {b!r}") from None
        bins = tuple(parsed)
        granularity = doc.get("granularity", default_granularity)
        if granularity not in ("day", "month", "quarter", "year"):
            raise ValueError(f"bad granularity {granularity!r}")
    elif "granularity" in doc:
        raise ValueError("'granularity' only makes sense with 'bins'")
    category_field = None
    category_value = None
    has_category = False
    if "category" in doc:
        cat = doc["category"]
        if not isinstance(cat, dict) or not isinstance(cat.get("field"), str) \
                or "value" not in cat:
            raise ValueError("'category' needs {field, value}")
        extra = set(cat) - {"field", "value"}
        if extra:
            raise ValueError(f"unknown category keys {sorted(extra)!r}")
        category_field = cat["field"]
        category_value = cat["value"]
        has_category = True
    record_ids = None
    if "record_ids" in doc:
        raw_ids = doc["record_ids"]
        if not isinstance(raw_ids, list) or \
                not all(isinstance(i, int) and not isinstance(i, bool)
                        for i in raw_ids):
            raise ValueError("'record_ids' must be a list of integers")
        record_ids = tuple(raw_ids)
    return Selection(bins=bins, granularity=granularity,
                     category_field=category_field,
                     category_value=category_value,
                     has_category=has_category, record_ids=record_ids)
