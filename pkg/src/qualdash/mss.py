"""Metric specification structures: the JSON grammar that drives every card.

A dashboard config is a JSON document naming an audit, an x-axis date field
and a list of metric specifications.  Each metric specification is
self-contained: measures with filter clauses, aggregation rules, subsidiary
views (categories, quantities, times) and an optional event annotation.
This module owns the object model, the parser, the serializer and the
validator; it never touches data files.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field as dc_field
from typing import Any, Iterator, Mapping, Optional

RULE_KINDS = ("count", "sum", "runningSum", "average", "runningAverage")
GRANULARITIES = ("day", "month", "quarter", "year")
MARKS = ("bar", "line")
CHARTS = ("stacked", "grouped")
OPERATORS = ("and", "or")
FIELD_TYPES = ("quantitative", "nominal", "ordinal", "temporal", "boolean")

DEFAULT_OPERATOR = "and"
DEFAULT_MARK = "bar"
DEFAULT_CHART = "grouped"
DEFAULT_TSPAN = 3
DEFAULT_GRANULARITY = "month"

MAX_MEASURES = 5
MAX_QUANTITY_TABS = 5
MAX_RULE_KINDS = 2

# Rules that consume a value field.  Pure count never takes one; interval
# measures (start/end) supply their own day counts.
VALUE_RULES = ("sum", "average", "runningAverage")


class MssError(Exception):
    """Base class for grammar-level failures."""


class MssParseError(MssError):
    """Raised when a config document cannot be turned into objects at all.

    Carries enough position information to point an editor at the problem:
    ``line``/``col`` for JSON syntax errors, ``path`` for structural ones.
    """

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None, path: str | None = None):
        self.line = line
        self.col = col
        self.path = path
        loc = ""
        if line is not None:
            loc = f" at line {line}, column {col}"
        elif path:
            loc = f" at {path}"
        super().__init__(message + loc)


@dataclass(frozen=True)
class Finding:
    """One validation or parse observation, anchored to a config path."""

    path: str
    code: str
    message: str

    def to_json(self) -> dict:
        return {"path": self.path, "code": self.code, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Finding, ...] = ()
    warnings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {f.code for f in self.errors}

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [f.to_json() for f in self.errors],
            "warnings": [f.to_json() for f in self.warnings],
        }


def _values_equal(a: Any, b: Any) -> bool:
    """Equality that keeps booleans out of the integer lattice.

    Python says True == 1; audit data must not.  Numbers still compare
    across int/float so a CSV-typed 3 matches a literal 3.0.
    """
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if isinstance(a, datetime.date) and isinstance(b, str):
        b = _as_date_literal(b) or b
    elif isinstance(b, datetime.date) and isinstance(a, str):
        a = _as_date_literal(a) or a
    if type(a) is not type(b) and not (
            isinstance(a, (int, float)) and isinstance(b, (int, float))):
        return False
    return a == b


def _as_date_literal(text: str) -> datetime.date | None:
    try:
        return datetime.date.fromisoformat(text)
    except (ValueError, TypeError):
        return None


@dataclass(frozen=True)
class Predicate:
    """A single-field test: equals, membership, missingness or a negation.

    ``value`` holds the comparison literal (scalar for equals, tuple for
    in, nested Predicate for not, None for missing).
    """

    op: str
    value: Any = None

    def matches(self, value: Any) -> bool:
        if self.op == "missing":
            return value is None
        if self.op == "not":
            return not self.value.matches(value)
        if self.op == "equals":
            if value is None:
                # A field that was never recorded reads as not-done when the
                # question is a yes/no one; any other comparison fails.
                return self.value is False
            return _values_equal(value, self.value)
        if self.op == "in":
            if value is None:
                return any(v is False for v in self.value)
            return any(_values_equal(value, v) for v in self.value)
        raise ValueError(f"unknown predicate op {self.op!r}")

    def to_json(self) -> Any:
        if self.op == "equals":
            return self.value if not isinstance(self.value, (dict, list)) \
                else {"equals": self.value}
        if self.op == "in":
            return {"in": list(self.value)}
        if self.op == "missing":
            return {"missing": True}
        if self.op == "not":
            return {"not": self.value.to_json()}
        raise ValueError(f"unknown predicate op {self.op!r}")


def equals(value: Any) -> Predicate:
    return Predicate("equals", value)


def isin(values) -> Predicate:
    return Predicate("in", tuple(values))


def missing() -> Predicate:
    return Predicate("missing")


def negate(inner: Predicate) -> Predicate:
    return Predicate("not", inner)


@dataclass(frozen=True)
class FilterClause:
    field: str
    predicate: Predicate


@dataclass(frozen=True)
class MeasureSpec:
    """One named measure inside a metric.

    ``where`` clauses combine under ``operator`` (default and).  ``valid``
    maps a field to its list of acceptable codes; rows outside the list are
    excluded from the measure and surface in the quality statistics.
    ``field_name`` (JSON key "field") names the value column consumed by
    sum/average rules.  ``start``/``end`` turn the measure into an interval
    one: per-bin occupied days between the two date fields.
    """

    name: str
    where: tuple[FilterClause, ...] = ()
    operator: Optional[str] = None
    valid: Mapping[str, tuple] = dc_field(default_factory=dict)
    field_name: Optional[str] = None
    start: Optional[str] = None
    end: Optional[str] = None

    @property
    def effective_operator(self) -> str:
        return self.operator or DEFAULT_OPERATOR

    @property
    def is_interval(self) -> bool:
        return self.start is not None and self.end is not None

    def referenced_fields(self) -> list[str]:
        seen: list[str] = []
        for clause in self.where:
            if clause.field not in seen:
                seen.append(clause.field)
        for f in self.valid:
            if f not in seen:
                seen.append(f)
        for f in (self.field_name, self.start, self.end):
            if f is not None and f not in seen:
                seen.append(f)
        return seen


@dataclass(frozen=True)
class QuantityTab:
    field_name: str
    aggregate: str


@dataclass(frozen=True)
class SubsidiaryConfig:
    """Expanded-state views: category pies, quantity tabs, time context.

    ``times`` maps a granularity to the measures shown at it; the first key
    in document order is the granularity displayed by default.  ``tspan`` is
    the number of years of context (default 3).
    """

    categories: tuple[str, ...] = ()
    quantities: tuple[QuantityTab, ...] = ()
    times: Optional[Mapping[str, tuple[str, ...]]] = None
    tspan: Optional[int] = None

    @property
    def effective_tspan(self) -> int:
        return DEFAULT_TSPAN if self.tspan is None else self.tspan

    def effective_times(self, measure_names) -> Mapping[str, tuple[str, ...]]:
        if self.times:
            return self.times
        return {DEFAULT_GRANULARITY: tuple(measure_names)}

    @property
    def default_granularity(self) -> Optional[str]:
        if not self.times:
            return None
        return next(iter(self.times))


@dataclass(frozen=True)
class EventSpec:
    """Where to find notable events in the data: a label plus the date and
    primary-key fields that locate the most recent occurrence."""

    name: str
    date_field: str
    desc: str = ""
    id_field: Optional[str] = None


@dataclass(frozen=True)
class MetricSpec:
    metric: str
    measures: tuple[MeasureSpec, ...] = ()
    yaggregates: Mapping[str, str] = dc_field(default_factory=dict)
    desc: Optional[str] = None
    mark: Optional[str] = None
    chart: Optional[str] = None
    ylabel: Optional[str] = None
    legend: Optional[tuple[str, ...]] = None
    subsidiary: SubsidiaryConfig = dc_field(default_factory=SubsidiaryConfig)
    event: Optional[EventSpec] = None

    @property
    def effective_mark(self) -> str:
        return self.mark or DEFAULT_MARK

    @property
    def effective_chart(self) -> str:
        return self.chart or DEFAULT_CHART

    def measure(self, name: str) -> MeasureSpec:
        for m in self.measures:
            if m.name == name:
                return m
        raise KeyError(name)

    def measure_names(self) -> list[str]:
        return [m.name for m in self.measures]

    def rule_for(self, name: str) -> Optional[str]:
        return self.yaggregates.get(name)

    def referenced_fields(self) -> list[str]:
        """Fields consumed by the measures, in declaration order."""
        seen: list[str] = []
        for m in self.measures:
            for f in m.referenced_fields():
                if f not in seen:
                    seen.append(f)
        return seen


@dataclass(frozen=True)
class DashboardConfig:
    audit: str
    xfield: str
    metrics: tuple[MetricSpec, ...] = ()
    field_aliases: Mapping[str, str] = dc_field(default_factory=dict)
    # Unknown-key observations from parsing travel with the config so
    # validate_config can fold them into its report.  Not part of equality.
    parse_warnings: tuple[Finding, ...] = dc_field(default=(), compare=False)

    def metric(self, name: str) -> MetricSpec:
        for m in self.metrics:
            if m.metric == name:
                return m
        raise KeyError(name)

    def metric_names(self) -> list[str]:
        return [m.metric for m in self.metrics]


@dataclass(frozen=True)
class FieldInfo:
    type: str
    description: str

    def __post_init__(self):
        if self.type not in FIELD_TYPES:
            raise ValueError(f"unknown field type {self.type!r}")
        if not self.description:
            raise ValueError("field description must be non-empty")


class DataDictionary:
    """Immutable name -> FieldInfo map describing one audit's schema."""

    def __init__(self, fields: Mapping[str, FieldInfo]):
        self._fields = dict(fields)

    def __contains__(self, name: str) -> bool:
        return name in self._fields

    def __getitem__(self, name: str) -> FieldInfo:
        return self._fields[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._fields)

    def __len__(self) -> int:
        return len(self._fields)

    def __eq__(self, other) -> bool:
        return isinstance(other, DataDictionary) and self._fields == other._fields

    def get(self, name: str) -> FieldInfo | None:
        return self._fields.get(name)

    def field_type(self, name: str) -> str | None:
        info = self._fields.get(name)
        return info.type if info else None

    def names(self) -> list[str]:
        return list(self._fields)

    def restrict(self, names) -> "DataDictionary":
        return DataDictionary({n: self._fields[n] for n in names
                               if n in self._fields})

    def extend(self, name: str, info: FieldInfo) -> "DataDictionary":
        if name in self._fields:
            raise ValueError(f"field {name!r} already in dictionary")
        merged = dict(self._fields)
        merged[name] = info
        return DataDictionary(merged)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "DataDictionary":
        if not isinstance(raw, Mapping):
            raise ValueError("data dictionary must be an object "
                             "mapping field names to entries")
        fields = {}
        for name, entry in raw.items():
            if not isinstance(entry, dict):
                raise ValueError(f"dictionary entry {name!r} must be an object")
            fields[name] = FieldInfo(
                type=entry.get("type", ""),
                description=entry.get("description", ""),
            )
        return cls(fields)

    @classmethod
    def from_json(cls, text: str) -> "DataDictionary":
        return cls.from_mapping(json.loads(text))

    def to_json(self) -> str:
        doc = {name: {"type": info.type, "description": info.description}
               for name, info in self._fields.items()}
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Parsing

_METRIC_KEYS = {"metric", "desc", "mark", "chart", "ylabel", "legend",
                "yfilters", "yaggregates", "categories", "quantities",
                "times", "tspan", "event"}
_MEASURE_KEYS = {"where", "operator", "valid", "field"}
_TOP_KEYS = {"audit", "xfield", "field_aliases", "metrics"}
_EVENT_KEYS = {"name", "date", "desc", "id"}
_RESERVED_WHERE_KEYS = {"start", "end"}


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise MssParseError(message, path=path)


def _parse_predicate(raw: Any, path: str) -> Predicate:
    if isinstance(raw, dict):
        if set(raw) == {"in"}:
            _expect(isinstance(raw["in"], list), "'in' takes a list", path)
            return isin(raw["in"])
        if set(raw) == {"missing"}:
            _expect(raw["missing"] is True, "'missing' takes true", path)
            return missing()
        if set(raw) == {"not"}:
            return negate(_parse_predicate(raw["not"], path + ".not"))
        if set(raw) == {"equals"}:
            return equals(raw["equals"])
        raise MssParseError(
            "predicate object must be one of equals/in/missing/not", path=path)
    if isinstance(raw, list):
        raise MssParseError("bare list is not a predicate; use {\"in\": [...]}",
                            path=path)
    return equals(raw)


def _parse_measure(name: str, raw: Any, path: str,
                   warnings: list[Finding]) -> MeasureSpec:
    _expect(isinstance(raw, dict), "measure must be an object", path)
    for key in raw:
        if key not in _MEASURE_KEYS:
            warnings.append(Finding(f"{path}.{key}", "UnknownKey",
                                    f"unknown measure key {key!r}"))
    clauses: list[FilterClause] = []
    start = end = None
    where = raw.get("where", {})
    _expect(isinstance(where, dict), "'where' must be an object", path + ".where")
    for fname, fraw in where.items():
        fpath = f"{path}.where.{fname}"
        if fname in _RESERVED_WHERE_KEYS:
            _expect(isinstance(fraw, str),
                    f"{fname!r} must name a date field", fpath)
            if fname == "start":
                start = fraw
            else:
                end = fraw
        else:
            clauses.append(FilterClause(fname, _parse_predicate(fraw, fpath)))
    operator = raw.get("operator")
    if operator is not None:
        _expect(operator in OPERATORS,
                f"operator must be one of {OPERATORS}", path + ".operator")
    valid_raw = raw.get("valid", {})
    _expect(isinstance(valid_raw, dict), "'valid' must be an object",
            path + ".valid")
    valid = {}
    for fname, values in valid_raw.items():
        _expect(isinstance(values, list), "valid values must be a list",
                f"{path}.valid.{fname}")
        valid[fname] = tuple(values)
    field_name = raw.get("field")
    if field_name is not None:
        _expect(isinstance(field_name, str), "'field' must be a string",
                path + ".field")
    return MeasureSpec(name=name, where=tuple(clauses), operator=operator,
                       valid=valid, field_name=field_name,
                       start=start, end=end)


def _parse_event(raw: Any, path: str) -> EventSpec:
    _expect(isinstance(raw, dict), "event must be an object", path)
    for key in ("name", "date"):
        _expect(isinstance(raw.get(key), str) and raw[key],
                f"event needs a {key!r} string", path)
    for key in raw:
        _expect(key in _EVENT_KEYS, f"unknown event key {key!r}",
                f"{path}.{key}")
    return EventSpec(name=raw["name"], date_field=raw["date"],
                     desc=raw.get("desc", ""), id_field=raw.get("id"))


def _parse_metric(raw: Any, index: int, warnings: list[Finding]) -> MetricSpec:
    path = f"metrics[{index}]"
    _expect(isinstance(raw, dict), "metric must be an object", path)
    _expect(isinstance(raw.get("metric"), str) and raw["metric"],
            "metric needs a non-empty 'metric' name", path)
    name = raw["metric"]
    for key in raw:
        if key not in _METRIC_KEYS:
            warnings.append(Finding(f"{path}.{key}", "UnknownKey",
                                    f"unknown metric key {key!r}"))
    for key, allowed in (("mark", MARKS), ("chart", CHARTS)):
        if key in raw:
            _expect(raw[key] in allowed,
                    f"{key} must be one of {allowed}", f"{path}.{key}")
    yfilters = raw.get("yfilters", {})
    _expect(isinstance(yfilters, dict), "'yfilters' must be an object",
            path + ".yfilters")
    measures = tuple(
        _parse_measure(mname, mraw, f"{path}.yfilters.{mname}", warnings)
        for mname, mraw in yfilters.items())
    yaggregates_raw = raw.get("yaggregates", {})
    _expect(isinstance(yaggregates_raw, dict), "'yaggregates' must be an object",
            path + ".yaggregates")
    yaggregates = {}
    for mname, rule in yaggregates_raw.items():
        _expect(rule in RULE_KINDS,
                f"malformed aggregation rule {rule!r}; "
                f"expected one of {RULE_KINDS}",
                f"{path}.yaggregates.{mname}")
        yaggregates[mname] = rule
    legend = raw.get("legend")
    if legend is not None:
        _expect(isinstance(legend, list) and
                all(isinstance(x, str) for x in legend),
                "'legend' must be a list of strings", path + ".legend")
        legend = tuple(legend)
    categories = raw.get("categories", [])
    _expect(isinstance(categories, list) and
            all(isinstance(x, str) for x in categories),
            "'categories' must be a list of field names", path + ".categories")
    quantities_raw = raw.get("quantities", [])
    _expect(isinstance(quantities_raw, list), "'quantities' must be a list",
            path + ".quantities")
    quantities = []
    for i, q in enumerate(quantities_raw):
        qpath = f"{path}.quantities[{i}]"
        _expect(isinstance(q, dict) and isinstance(q.get("field"), str),
                "quantity tab needs a 'field'", qpath)
        agg = q.get("aggregate", "average")
        _expect(agg in RULE_KINDS,
                f"malformed aggregation rule {agg!r}", qpath + ".aggregate")
        for key in q:
            if key not in ("field", "aggregate"):
                warnings.append(Finding(f"{qpath}.{key}", "UnknownKey",
                                        f"unknown quantity key {key!r}"))
        quantities.append(QuantityTab(q["field"], agg))
    times_raw = raw.get("times")
    times = None
    if times_raw is not None:
        _expect(isinstance(times_raw, dict), "'times' must be an object",
                path + ".times")
        times = {}
        for gran, names in times_raw.items():
            _expect(isinstance(names, list) and
                    all(isinstance(x, str) for x in names),
                    "times entry must list measure names",
                    f"{path}.times.{gran}")
            times[gran] = tuple(names)
    tspan = raw.get("tspan")
    if tspan is not None:
        _expect(isinstance(tspan, int) and not isinstance(tspan, bool),
                "'tspan' must be an integer", path + ".tspan")
    event = None
    if "event" in raw:
        event = _parse_event(raw["event"], path + ".event")
    subsidiary = SubsidiaryConfig(categories=tuple(categories),
                                  quantities=tuple(quantities),
                                  times=times, tspan=tspan)
    desc = raw.get("desc")
    if desc is not None:
        _expect(isinstance(desc, str), "'desc' must be a string", path + ".desc")
    ylabel = raw.get("ylabel")
    if ylabel is not None:
        _expect(isinstance(ylabel, str), "'ylabel' must be a string",
                path + ".ylabel")
    return MetricSpec(metric=name, measures=measures, yaggregates=yaggregates,
                      desc=desc, mark=raw.get("mark"), chart=raw.get("chart"),
                      ylabel=ylabel, legend=legend, subsidiary=subsidiary,
                      event=event)


def parse_config(text: str) -> DashboardConfig:
    """Parse a dashboard config document.

    Raises MssParseError for JSON syntax problems (with line/column), for
    structural violations of the grammar, for duplicate metric names and for
    malformed aggregation rule names.  Unknown keys are tolerated and
    reported as warnings attached to the returned config.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MssParseError(f"invalid JSON: {exc.msg}",
                            line=exc.lineno, col=exc.colno) from exc
    _expect(isinstance(raw, dict), "config must be a JSON object", "$")
    _expect(isinstance(raw.get("audit"), str) and raw["audit"],
            "config needs a non-empty 'audit' name", "$")
    _expect(isinstance(raw.get("xfield"), str) and raw["xfield"],
            "config needs an 'xfield'", "$")
    warnings: list[Finding] = []
    for key in raw:
        if key not in _TOP_KEYS:
            warnings.append(Finding(key, "UnknownKey",
                                    f"unknown top-level key {key!r}"))
    aliases_raw = raw.get("field_aliases", {})
    _expect(isinstance(aliases_raw, dict) and
            all(isinstance(v, str) for v in aliases_raw.values()),
            "'field_aliases' must map strings to strings", "field_aliases")
    metrics_raw = raw.get("metrics", [])
    _expect(isinstance(metrics_raw, list), "'metrics' must be a list", "metrics")
    metrics = tuple(_parse_metric(m, i, warnings)
                    for i, m in enumerate(metrics_raw))
    seen: set[str] = set()
    for m in metrics:
        if m.metric in seen:
            raise MssParseError(f"duplicate metric name {m.metric!r}",
                                path="metrics")
        seen.add(m.metric)
    return DashboardConfig(audit=raw["audit"], xfield=raw["xfield"],
                           metrics=metrics, field_aliases=dict(aliases_raw),
                           parse_warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Serialization

def _measure_to_json(m: MeasureSpec) -> dict:
    doc: dict[str, Any] = {}
    where: dict[str, Any] = {}
    for clause in m.where:
        where[clause.field] = clause.predicate.to_json()
    if m.start is not None:
        where["start"] = m.start
    if m.end is not None:
        where["end"] = m.end
    if where:
        doc["where"] = where
    if m.operator is not None:
        doc["operator"] = m.operator
    if m.valid:
        doc["valid"] = {f: list(v) for f, v in m.valid.items()}
    if m.field_name is not None:
        doc["field"] = m.field_name
    return doc


def _metric_to_json(spec: MetricSpec) -> dict:
    doc: dict[str, Any] = {"metric": spec.metric}
    if spec.desc is not None:
        doc["desc"] = spec.desc
    if spec.mark is not None:
        doc["mark"] = spec.mark
    if spec.chart is not None:
        doc["chart"] = spec.chart
    if spec.ylabel is not None:
        doc["ylabel"] = spec.ylabel
    if spec.legend is not None:
        doc["legend"] = list(spec.legend)
    if spec.measures:
        doc["yfilters"] = {m.name: _measure_to_json(m) for m in spec.measures}
    if spec.yaggregates:
        doc["yaggregates"] = dict(spec.yaggregates)
    sub = spec.subsidiary
    if sub.categories:
        doc["categories"] = list(sub.categories)
    if sub.quantities:
        doc["quantities"] = [{"field": q.field_name, "aggregate": q.aggregate}
                             for q in sub.quantities]
    if sub.times is not None:
        doc["times"] = {g: list(names) for g, names in sub.times.items()}
    if sub.tspan is not None:
        doc["tspan"] = sub.tspan
    if spec.event is not None:
        ev: dict[str, Any] = {"name": spec.event.name,
                              "date": spec.event.date_field}
        if spec.event.desc:
            ev["desc"] = spec.event.desc
        if spec.event.id_field is not None:
            ev["id"] = spec.event.id_field
        doc["event"] = ev
    return doc


def serialize_config(config: DashboardConfig) -> str:
    """Emit a config document that parses back to an equal config.

    Only explicitly-set values are written; absent optionals stay absent so
    defaults are not materialized into the document.
    """
    doc: dict[str, Any] = {"audit": config.audit, "xfield": config.xfield}
    if config.field_aliases:
        doc["field_aliases"] = dict(config.field_aliases)
    doc["metrics"] = [_metric_to_json(m) for m in config.metrics]
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Validation

def _resolve(name: str, aliases: Mapping[str, str]) -> str:
    return aliases.get(name, name)


def _check_field(name: str, dictionary: DataDictionary,
                 aliases: Mapping[str, str], path: str,
                 errors: list[Finding], expect_types: tuple[str, ...] = ()):
    resolved = _resolve(name, aliases)
    if resolved not in dictionary:
        errors.append(Finding(path, "UnknownField",
                              f"field {name!r} is not in the data dictionary"))
        return
    if expect_types:
        ftype = dictionary.field_type(resolved)
        if ftype not in expect_types:
            errors.append(Finding(path, "WrongFieldType",
                                  f"field {name!r} is {ftype}, expected one of "
                                  f"{expect_types}"))


def _validate_metric(spec: MetricSpec, dictionary: DataDictionary,
                     aliases: Mapping[str, str], errors: list[Finding],
                     warnings: list[Finding]):
    path = f"metrics.{spec.metric}"
    n = len(spec.measures)
    if n == 0:
        errors.append(Finding(path + ".yfilters", "NoMeasures",
                              "a metric needs at least one measure"))
    elif n > MAX_MEASURES:
        errors.append(Finding(path + ".yfilters", "TooManyMeasures",
                              f"{n} measures exceed the limit of {MAX_MEASURES}"))
    declared = set(spec.measure_names())
    kinds_in_order: list[str] = []
    for mname in spec.measure_names():
        rule = spec.yaggregates.get(mname)
        if rule is not None and rule not in kinds_in_order:
            kinds_in_order.append(rule)
    if len(kinds_in_order) > MAX_RULE_KINDS:
        errors.append(Finding(path + ".yaggregates", "TooManyRuleKinds",
                              f"{len(kinds_in_order)} distinct rule kinds "
                              f"exceed the limit of {MAX_RULE_KINDS}"))
    for mname in spec.yaggregates:
        if mname not in declared:
            errors.append(Finding(f"{path}.yaggregates.{mname}",
                                  "UnknownMeasure",
                                  f"rule names undeclared measure {mname!r}"))
    for m in spec.measures:
        mpath = f"{path}.yfilters.{m.name}"
        rule = spec.yaggregates.get(m.name)
        if rule is None:
            errors.append(Finding(f"{path}.yaggregates", "MissingRule",
                                  f"measure {m.name!r} has no aggregation rule"))
        if (m.start is None) != (m.end is None):
            errors.append(Finding(mpath + ".where", "IntervalFieldsMismatch",
                                  "start and end must appear together"))
        if m.is_interval:
            if rule is not None and rule not in ("sum", "count"):
                errors.append(Finding(f"{path}.yaggregates.{m.name}",
                                      "BadIntervalRule",
                                      f"interval measure cannot use {rule!r}"))
            if m.field_name is not None:
                warnings.append(Finding(mpath + ".field", "SpuriousField",
                                        "interval measures ignore 'field'"))
        else:
            if rule == "count" and m.field_name is not None:
                errors.append(Finding(mpath + ".field", "SpuriousField",
                                      "count rules take no value field"))
            if rule in VALUE_RULES and m.field_name is None:
                errors.append(Finding(mpath, "MissingAggregateField",
                                      f"rule {rule!r} needs a value field"))
        for clause in m.where:
            _check_field(clause.field, dictionary, aliases,
                         f"{mpath}.where.{clause.field}", errors)
        for fname in m.valid:
            _check_field(fname, dictionary, aliases,
                         f"{mpath}.valid.{fname}", errors)
        if m.field_name is not None:
            _check_field(m.field_name, dictionary, aliases,
                         mpath + ".field", errors)
        for key, fname in (("start", m.start), ("end", m.end)):
            if fname is not None:
                _check_field(fname, dictionary, aliases,
                             f"{mpath}.where.{key}", errors,
                             expect_types=("temporal",))
    sub = spec.subsidiary
    for cat in sub.categories:
        _check_field(cat, dictionary, aliases, f"{path}.categories.{cat}",
                     errors)
    if len(sub.quantities) > MAX_QUANTITY_TABS:
        errors.append(Finding(path + ".quantities", "TooManyQuantities",
                              f"{len(sub.quantities)} quantity tabs exceed "
                              f"the limit of {MAX_QUANTITY_TABS}"))
    for i, q in enumerate(sub.quantities):
        _check_field(q.field_name, dictionary, aliases,
                     f"{path}.quantities[{i}]", errors,
                     expect_types=("quantitative",))
    if sub.times is not None:
        for gran, names in sub.times.items():
            gpath = f"{path}.times.{gran}"
            if gran not in GRANULARITIES:
                errors.append(Finding(gpath, "BadGranularity",
                                      f"unknown granularity {gran!r}"))
            for mname in names:
                if mname not in declared:
                    errors.append(Finding(gpath, "UnknownMeasure",
                                          f"times entry names undeclared "
                                          f"measure {mname!r}"))
    if sub.tspan is not None and sub.tspan < 1:
        errors.append(Finding(path + ".tspan", "BadTspan",
                              "tspan must be at least 1"))
    if spec.event is not None:
        _check_field(spec.event.date_field, dictionary, aliases,
                     path + ".event.date", errors, expect_types=("temporal",))
        if spec.event.id_field is not None:
            _check_field(spec.event.id_field, dictionary, aliases,
                         path + ".event.id", errors)
    if spec.legend is not None and len(spec.legend) != len(spec.measures):
        warnings.append(Finding(path + ".legend", "LegendMismatch",
                                f"{len(spec.legend)} legend labels for "
                                f"{len(spec.measures)} measures"))


def validate_config(config: DashboardConfig,
                    dictionary: DataDictionary) -> ValidationReport:
    """Check a parsed config against a data dictionary.

    An empty error list means the engine can load the config: every
    referenced field exists, every rule has what it needs and all the
    structural limits hold.  Parse-time unknown-key findings are carried
    over as warnings.
    """
    errors: list[Finding] = []
    warnings: list[Finding] = list(config.parse_warnings)
    aliases = config.field_aliases
    _check_field(config.xfield, dictionary, aliases, "xfield", errors,
                 expect_types=("temporal",))
    for spec in config.metrics:
        _validate_metric(spec, dictionary, aliases, errors, warnings)
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))
