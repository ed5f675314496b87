"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the production aggregation code: bin
membership comes from day-by-day enumeration, filters are re-evaluated from
the documented matching rules, and derivations run through a tiny recursive
interpreter.  When a test compares engine output against these, agreement
means two unrelated routes produced the same numbers.
"""

import datetime
import random

from qualdash import mss
from qualdash.data.table import DataTable
from qualdash.mss import (
    DataDictionary,
    FieldInfo,
    FilterClause,
    MeasureSpec,
    MetricSpec,
    QuantityTab,
    SubsidiaryConfig,
    equals,
)

DAY = datetime.timedelta(days=1)


def d(text):
    return datetime.date.fromisoformat(text)


# ---------------------------------------------------------------------------
# T0: six hand-enumerable intensive-care records

def t0_dictionary() -> DataDictionary:
    return DataDictionary({
        "AdmitDate": FieldInfo("temporal", "Date of admission"),
        "DischargeDate": FieldInfo("temporal", "Date of discharge"),
        "DischargeStatus": FieldInfo("nominal", "Status at discharge"),
        "PrimReason": FieldInfo("nominal", "Primary reason for admission"),
        "PIMScore": FieldInfo("quantitative", "Mortality index score"),
    })


def t0_table() -> DataTable:
    rows = (
        {"AdmitDate": d("2019-01-05"), "DischargeStatus": "alive",
         "PrimReason": "surgery", "PIMScore": 2.0},
        {"AdmitDate": d("2019-01-20"), "DischargeStatus": "deceased",
         "PrimReason": "bronchiolitis", "PIMScore": 9.0},
        {"AdmitDate": d("2019-02-02"), "DischargeStatus": "alive",
         "PrimReason": "surgery", "PIMScore": 1.0},
        {"AdmitDate": d("2019-02-14"), "DischargeStatus": "alive",
         "PrimReason": "other", "PIMScore": 3.0},
        {"AdmitDate": d("2019-02-28"), "DischargeStatus": "deceased",
         "PrimReason": "surgery", "PIMScore": 7.0},
        {"AdmitDate": d("2019-03-01"), "DischargeStatus": None,
         "PrimReason": "surgery", "PIMScore": None},
    )
    full = [dict(r, DischargeDate=None) for r in rows]
    return DataTable(schema=t0_dictionary(), rows=tuple(full))


def t0_metric() -> MetricSpec:
    """Mortality metric over T0: two counts plus the category breakdown."""
    alive = MeasureSpec(
        name="AliveDischarges",
        where=(FilterClause("DischargeStatus", equals("alive")),),
        valid={"DischargeStatus": ("alive", "deceased")},
    )
    deaths = MeasureSpec(
        name="DeathsInUnit",
        where=(FilterClause("DischargeStatus", equals("deceased")),),
        valid={"DischargeStatus": ("alive", "deceased")},
    )
    return MetricSpec(
        metric="Mortality",
        measures=(alive, deaths),
        yaggregates={"AliveDischarges": "count", "DeathsInUnit": "count"},
        subsidiary=SubsidiaryConfig(
            categories=("PrimReason",),
            quantities=(QuantityTab("PIMScore", "average"),),
        ),
    )


def make_table(dictionary: DataDictionary, rows) -> DataTable:
    return DataTable(schema=dictionary, rows=tuple(dict(r) for r in rows))


# ---------------------------------------------------------------------------
# Independent calendar binning

def bin_tuple(day: datetime.date, granularity: str):
    if granularity == "day":
        return (day.year, day.month, day.day)
    if granularity == "month":
        return (day.year, day.month)
    if granularity == "quarter":
        return (day.year, (day.month - 1) // 3)
    if granularity == "year":
        return (day.year,)
    raise ValueError(granularity)


def expected_bin_tuples(timeframe, granularity):
    """Distinct bin keys covering the timeframe, by walking every day."""
    out = []
    day = timeframe.start
    while day <= timeframe.end:
        key = bin_tuple(day, granularity)
        if not out or out[-1] != key:
            out.append(key)
        day += DAY
    return out


def series_keys(series):
    return [bin_tuple(b, series.granularity) for b in series.bins]


# ---------------------------------------------------------------------------
# Independent filter evaluation

def match_eq(value, literal):
    if value is None:
        return literal is False
    if isinstance(value, bool) or isinstance(literal, bool):
        return isinstance(value, bool) and isinstance(literal, bool) \
            and value is literal
    if isinstance(value, (int, float)) and isinstance(literal, (int, float)):
        return float(value) == float(literal)
    for a, b in ((value, literal), (literal, value)):
        if isinstance(a, datetime.date) and isinstance(b, str):
            try:
                return a == datetime.date.fromisoformat(b)
            except ValueError:
                return False
    if type(value) is not type(literal):
        return False
    return value == literal


def pred_ok(pred, value):
    if pred.op == "missing":
        return value is None
    if pred.op == "not":
        return not pred_ok(pred.value, value)
    if pred.op == "equals":
        return match_eq(value, pred.value)
    if pred.op == "in":
        return any(match_eq(value, v) for v in pred.value)
    raise ValueError(pred.op)


def row_passes(row, measure: MeasureSpec) -> bool:
    if measure.where:
        hits = [pred_ok(c.predicate, row.get(c.field)) for c in measure.where]
        combined = all(hits) if measure.effective_operator == "and" else any(hits)
        if not combined:
            return False
    for fname, allowed in measure.valid.items():
        v = row.get(fname)
        if v is None or not any(match_eq(v, a) for a in allowed):
            return False
    return True


# ---------------------------------------------------------------------------
# Brute-force series oracle

def brute_series(table, measure, rule, xfield, granularity, timeframe):
    """Per-bin values by looping over records one at a time.

    Returns a list aligned with expected_bin_tuples(timeframe, granularity).
    Conventions mirror the documented ones: empty bins read 0 for count and
    sum, None for average; running rules accumulate left to right with the
    running average weighted per record.
    """
    keys = expected_bin_tuples(timeframe, granularity)
    index = {k: i for i, k in enumerate(keys)}
    per_bin = [[] for _ in keys]
    for row in table.rows:
        x = row.get(xfield)
        if not isinstance(x, datetime.date):
            continue
        if not (timeframe.start <= x <= timeframe.end):
            continue
        if not row_passes(row, measure):
            continue
        k = index[bin_tuple(x, granularity)]
        if rule == "count" or (rule == "runningSum"
                               and measure.field_name is None):
            per_bin[k].append(1)
        else:
            v = row.get(measure.field_name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                continue
            per_bin[k].append(float(v))

    if rule == "count":
        return [len(b) for b in per_bin]
    if rule == "sum":
        return [float(sum(b)) for b in per_bin]
    if rule == "average":
        return [sum(b) / len(b) if b else None for b in per_bin]
    if rule == "runningSum":
        acc = 0
        out = []
        for b in per_bin:
            acc += len(b) if measure.field_name is None else sum(b)
            out.append(acc)
        return out
    if rule == "runningAverage":
        total = 0.0
        count = 0
        out = []
        for b in per_bin:
            total += sum(b)
            count += len(b)
            out.append(total / count if count else None)
        return out
    raise ValueError(rule)


def interval_days_oracle(table, start_field, end_field, timeframe,
                         granularity, eligible=None):
    """Occupied days per bin by enumerating every single day.

    Each record contributes one day per calendar day in [start, end),
    clipped to the timeframe.  Slow on purpose; the production kernel does
    this with interval arithmetic.
    """
    keys = expected_bin_tuples(timeframe, granularity)
    index = {k: i for i, k in enumerate(keys)}
    totals = [0] * len(keys)
    rows = table.rows if eligible is None else [table.rows[i] for i in eligible]
    for row in rows:
        s = row.get(start_field)
        e = row.get(end_field)
        if not isinstance(s, datetime.date) or not isinstance(e, datetime.date):
            continue
        if e < s:
            continue
        day = max(s, timeframe.start)
        stop = min(e, timeframe.end + DAY)
        while day < stop:
            totals[index[bin_tuple(day, granularity)]] += 1
            day += DAY
    return totals


# ---------------------------------------------------------------------------
# Derivation expression oracle

def eval_expr(expr, row):
    """Recursive 3-state interpreter for derivation expression JSON."""
    if "and" in expr:
        return all(eval_expr(e, row) for e in expr["and"])
    if "or" in expr:
        return any(eval_expr(e, row) for e in expr["or"])
    if "not" in expr:
        return not eval_expr(expr["not"], row)
    if "date_diff_days" in expr:
        later, earlier = expr["date_diff_days"]
        a = row.get(later)
        b = row.get(earlier)
        if not isinstance(a, datetime.date) or not isinstance(b, datetime.date):
            return None
        return (a - b).days
    value = row.get(expr["field"])
    if "missing" in expr:
        return value is None
    if "equals" in expr:
        return match_eq(value, expr["equals"])
    if "in" in expr:
        return any(match_eq(value, v) for v in expr["in"])
    raise ValueError(f"bad expression {expr!r}")


# ---------------------------------------------------------------------------
# Random valid configs (round-trip and validator fuzzing)

_NOMINAL_VALUES = ["alpha", "beta", "gamma", "delta", "epsilon"]


def random_dictionary(rng: random.Random) -> DataDictionary:
    fields = {"EventDate": FieldInfo("temporal", "record date")}
    for i in range(rng.randint(2, 8)):
        name = f"F{i}"
        ftype = rng.choice(["nominal", "quantitative", "boolean", "temporal",
                            "ordinal"])
        fields[name] = FieldInfo(ftype, f"field {i}")
    return DataDictionary(fields)


def _fields_of_type(dictionary, ftype):
    return [n for n in dictionary.names()
            if dictionary.field_type(n) == ftype]


def _random_predicate_json(rng, dictionary, fname):
    ftype = dictionary.field_type(fname)
    if ftype == "boolean":
        pool = [True, False]
    elif ftype == "quantitative":
        pool = [0, 1, 2.5, 10]
    else:
        pool = _NOMINAL_VALUES
    roll = rng.random()
    if roll < 0.5:
        return rng.choice(pool)
    if roll < 0.75:
        k = rng.randint(1, min(3, len(pool)))
        return {"in": rng.sample(pool, k)}
    if roll < 0.9:
        return {"missing": True}
    return {"not": rng.choice(pool)}


def random_config_json(rng: random.Random):
    """One random valid dashboard document plus its dictionary.

    Shapes every grammar feature at some probability so a long run
    exercises the whole surface.  validate_config on the result must come
    back clean; parse-serialize-parse must be the identity.
    """
    dictionary = random_dictionary(rng)
    temporals = _fields_of_type(dictionary, "temporal")
    quants = _fields_of_type(dictionary, "quantitative")
    cats = _fields_of_type(dictionary, "nominal") \
        + _fields_of_type(dictionary, "ordinal")
    metrics = []
    for mi in range(rng.randint(0, 4)):
        n_measures = rng.randint(1, 5)
        kinds = rng.sample(["count", "sum", "runningSum", "average",
                            "runningAverage"], 2)
        # sum and count work without a field; value rules need quantities
        usable = [k for k in kinds
                  if quants or k in ("count",)
                  or (k == "runningSum" and not rng.random() < 0.5)]
        if not usable:
            usable = ["count"]
        yfilters = {}
        yaggregates = {}
        for i in range(n_measures):
            mname = f"M{mi}_{i}"
            rule = rng.choice(usable)
            measure = {}
            where = {}
            for fname in rng.sample(dictionary.names(),
                                    rng.randint(0, min(2, len(dictionary)))):
                where[fname] = _random_predicate_json(rng, dictionary, fname)
            if where:
                measure["where"] = where
            if rng.random() < 0.3:
                measure["operator"] = rng.choice(["and", "or"])
            if cats and rng.random() < 0.3:
                measure["valid"] = {rng.choice(cats):
                                    rng.sample(_NOMINAL_VALUES, 2)}
            interval = (rule in ("sum", "count") and len(temporals) >= 2
                        and rng.random() < 0.25)
            if interval:
                s, e = rng.sample(temporals, 2)
                measure.setdefault("where", {})["start"] = s
                measure["where"]["end"] = e
            elif rule in ("sum", "average", "runningAverage"):
                if not quants:
                    rule = "count"
                else:
                    measure["field"] = rng.choice(quants)
            elif rule == "runningSum" and quants and rng.random() < 0.5:
                measure["field"] = rng.choice(quants)
            yfilters[mname] = measure
            yaggregates[mname] = rule
        doc = {"metric": f"Metric{mi}", "yfilters": yfilters,
               "yaggregates": yaggregates}
        if rng.random() < 0.5:
            doc["desc"] = f"metric number {mi}"
        if rng.random() < 0.5:
            doc["mark"] = rng.choice(["bar", "line"])
        if rng.random() < 0.5:
            doc["chart"] = rng.choice(["stacked", "grouped"])
        if rng.random() < 0.3:
            doc["ylabel"] = "Records"
        if rng.random() < 0.3:
            doc["legend"] = [f"L{i}" for i in range(n_measures)]
        if cats and rng.random() < 0.6:
            doc["categories"] = rng.sample(cats, rng.randint(1, len(cats)))
        if quants and rng.random() < 0.6:
            doc["quantities"] = [
                {"field": rng.choice(quants),
                 "aggregate": rng.choice(["count", "sum", "average"])}
                for _ in range(rng.randint(1, min(5, len(quants) + 2)))]
        if rng.random() < 0.5:
            grans = rng.sample(["day", "month", "quarter", "year"],
                               rng.randint(1, 2))
            doc["times"] = {g: rng.sample(list(yfilters),
                                          rng.randint(1, len(yfilters)))
                            for g in grans}
        if rng.random() < 0.4:
            doc["tspan"] = rng.randint(1, 5)
        if temporals and rng.random() < 0.3:
            doc["event"] = {"name": "Inspection", "date": rng.choice(temporals),
                            "desc": "site inspection"}
        metrics.append(doc)
    top = {"audit": "randomaudit", "xfield": "EventDate", "metrics": metrics}
    if rng.random() < 0.3:
        top["field_aliases"] = {"ext_date": "EventDate"}
    return top, dictionary


# ---------------------------------------------------------------------------
# Random tables for the aggregation oracle suite

def random_table(rng: random.Random, n: int, year_lo=2017, year_hi=2019):
    dictionary = DataDictionary({
        "EventDate": FieldInfo("temporal", "record date"),
        "Status": FieldInfo("nominal", "status code"),
        "Flag": FieldInfo("boolean", "yes/no flag"),
        "Score": FieldInfo("quantitative", "numeric score"),
    })
    start = datetime.date(year_lo, 1, 1).toordinal()
    end = datetime.date(year_hi, 12, 31).toordinal()
    rows = []
    for _ in range(n):
        row = {
            "EventDate": (None if rng.random() < 0.05 else
                          datetime.date.fromordinal(rng.randint(start, end))),
            "Status": (None if rng.random() < 0.1 else
                       rng.choice(_NOMINAL_VALUES)),
            "Flag": (None if rng.random() < 0.1 else rng.random() < 0.5),
            "Score": (None if rng.random() < 0.1 else
                      round(rng.uniform(-5, 50), 3)),
        }
        rows.append(row)
    return DataTable(schema=dictionary, rows=tuple(rows))


def random_measure(rng: random.Random, rule: str) -> MeasureSpec:
    clauses = []
    if rng.random() < 0.6:
        roll = rng.random()
        if roll < 0.4:
            clauses.append(FilterClause("Status",
                                        equals(rng.choice(_NOMINAL_VALUES))))
        elif roll < 0.7:
            clauses.append(FilterClause("Status",
                                        mss.isin(rng.sample(_NOMINAL_VALUES, 2))))
        else:
            clauses.append(FilterClause("Flag", equals(rng.random() < 0.5)))
    if rng.random() < 0.3:
        clauses.append(FilterClause("Score", mss.missing()
                                    if rng.random() < 0.5
                                    else mss.negate(mss.missing())))
    operator = rng.choice([None, "and", "or"]) if len(clauses) > 1 else None
    valid = {}
    if rng.random() < 0.3:
        valid["Status"] = tuple(rng.sample(_NOMINAL_VALUES, 3))
    field = "Score" if rule in ("sum", "average", "runningAverage") else None
    if rule == "runningSum" and rng.random() < 0.5:
        field = "Score"
    return MeasureSpec(name="probe", where=tuple(clauses), operator=operator,
                       valid=valid, field_name=field)


# ---------------------------------------------------------------------------
# Minimal invariant-breaking configs, one per validator rule

def _metric_doc(**overrides):
    doc = {
        "metric": "Probe",
        "yfilters": {"All": {}},
        "yaggregates": {"All": "count"},
    }
    doc.update(overrides)
    return doc


def _top(metric_doc):
    return {"audit": "probe", "xfield": "EventDate", "metrics": [metric_doc]}


def invariant_cases():
    """(label, config document, expected error code) triples.

    Each document is the valid single-measure probe with exactly one thing
    broken, so the reported code pins the rule that caught it.
    """
    many = {f"M{i}": {} for i in range(6)}
    three_kinds = {
        "yfilters": {"A": {}, "B": {"field": "Score"}, "C": {"field": "Score"}},
        "yaggregates": {"A": "count", "B": "average", "C": "sum"},
    }
    return [
        ("no measures", _top(_metric_doc(yfilters={}, yaggregates={})),
         "NoMeasures"),
        ("six measures", _top(_metric_doc(
            yfilters=many, yaggregates={k: "count" for k in many})),
         "TooManyMeasures"),
        ("three rule kinds", _top(_metric_doc(**three_kinds)),
         "TooManyRuleKinds"),
        ("rule for undeclared measure", _top(_metric_doc(
            yaggregates={"All": "count", "Ghost": "count"})),
         "UnknownMeasure"),
        ("measure without a rule", _top(_metric_doc(yaggregates={})),
         "MissingRule"),
        ("start without end", _top(_metric_doc(
            yfilters={"All": {"where": {"start": "EventDate"}}})),
         "IntervalFieldsMismatch"),
        ("interval with average rule", _top(_metric_doc(
            yfilters={"All": {"where": {"start": "EventDate",
                                        "end": "OtherDate"}}},
            yaggregates={"All": "average"})),
         "BadIntervalRule"),
        ("count with a value field", _top(_metric_doc(
            yfilters={"All": {"field": "Score"}})),
         "SpuriousField"),
        ("average without a field", _top(_metric_doc(
            yaggregates={"All": "average"})),
         "MissingAggregateField"),
        ("unknown field in where", _top(_metric_doc(
            yfilters={"All": {"where": {"NoSuchField": 1}}})),
         "UnknownField"),
        ("nominal quantity tab", _top(_metric_doc(
            quantities=[{"field": "Status", "aggregate": "average"}])),
         "WrongFieldType"),
        ("six quantity tabs", _top(_metric_doc(
            quantities=[{"field": "Score", "aggregate": "sum"}] * 6)),
         "TooManyQuantities"),
        ("week granularity", _top(_metric_doc(times={"week": ["All"]})),
         "BadGranularity"),
        ("zero tspan", _top(_metric_doc(tspan=0)), "BadTspan"),
        ("nominal xfield", {"audit": "probe", "xfield": "Status",
                            "metrics": [_metric_doc()]},
         "WrongFieldType"),
    ]


def probe_dictionary() -> DataDictionary:
    return DataDictionary({
        "EventDate": FieldInfo("temporal", "record date"),
        "OtherDate": FieldInfo("temporal", "second date"),
        "Status": FieldInfo("nominal", "status code"),
        "Score": FieldInfo("quantitative", "numeric score"),
    })
