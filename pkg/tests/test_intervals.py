"""Interval occupancy: arithmetic kernel vs day-by-day enumeration."""

import datetime
import random

from helpers import (
    d,
    expected_bin_tuples,
    interval_days_oracle,
    make_table,
    series_keys,
)
from qualdash.mss import (
    DataDictionary,
    FieldInfo,
    FilterClause,
    MeasureSpec,
    MetricSpec,
    equals,
)
from qualdash.aggregate.binning import Timeframe
from qualdash.aggregate.engine import interval_series, series_for_measure


def stay_dictionary():
    return DataDictionary({
        "AdmitDate": FieldInfo("temporal", "admission"),
        "DischargeDate": FieldInfo("temporal", "discharge"),
        "Ward": FieldInfo("nominal", "ward code"),
    })


def stay_table(*pairs, ward="icu"):
    rows = [{"AdmitDate": s, "DischargeDate": e, "Ward": ward}
            for s, e in pairs]
    return make_table(stay_dictionary(), rows)


def run(table, tf, granularity="month", rule="sum", ids=None):
    return interval_series(table, "AdmitDate", "DischargeDate",
                           granularity, tf, measure_name="bedDays",
                           rule=rule, ids=ids)


def test_hand_case_across_month_boundary():
    # days occupied: 28,29,30,31 Jan and 1,2 Feb
    table = stay_table((d("2019-01-28"), d("2019-02-03")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-02-28")))
    assert series.values == (4, 2)


def test_same_day_stay_occupies_nothing():
    table = stay_table((d("2019-01-15"), d("2019-01-15")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-01-31")))
    assert series.values == (0,)


def test_missing_endpoint_contributes_nothing():
    table = stay_table((d("2019-01-10"), None), (None, d("2019-01-20")),
                       (d("2019-01-10"), d("2019-01-12")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-01-31")))
    assert series.values == (2,)


def test_end_before_start_contributes_nothing():
    table = stay_table((d("2019-01-20"), d("2019-01-10")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-01-31")))
    assert series.values == (0,)


def test_clipping_at_timeframe_edges():
    table = stay_table((d("2018-12-20"), d("2019-01-10")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-01-31")))
    assert series.values == (9,)    # 1 Jan .. 9 Jan inside the frame


def test_total_equals_clipped_lengths():
    rng = random.Random(777)
    tf = Timeframe(d("2018-01-01"), d("2018-12-31"))
    lo = d("2017-11-01").toordinal()
    hi = d("2019-02-01").toordinal()
    pairs = []
    for _ in range(300):
        a = rng.randint(lo, hi)
        b = a + rng.randint(0, 90)
        pairs.append((datetime.date.fromordinal(a),
                      datetime.date.fromordinal(b)))
    table = stay_table(*pairs)
    series = run(table, tf)
    frame_lo = tf.start.toordinal()
    frame_hi = tf.end.toordinal() + 1
    expected_total = sum(
        max(0, min(e.toordinal(), frame_hi) - max(s.toordinal(), frame_lo))
        for s, e in pairs)
    assert sum(series.values) == expected_total


def test_matches_day_enumeration_oracle():
    rng = random.Random(31173)
    for granularity in ("month", "quarter", "year", "day"):
        tf = Timeframe(d("2018-03-01"), d("2018-09-30")) \
            if granularity == "day" else Timeframe(d("2017-06-15"),
                                                   d("2019-05-10"))
        lo = (tf.start - datetime.timedelta(days=60)).toordinal()
        hi = (tf.end + datetime.timedelta(days=60)).toordinal()
        pairs = []
        for _ in range(120):
            a = rng.randint(lo, hi)
            b = a + rng.randint(-5, 120)     # a few inverted on purpose
            pairs.append((datetime.date.fromordinal(a),
                          datetime.date.fromordinal(b)))
        table = stay_table(*pairs)
        series = run(table, tf, granularity)
        assert series_keys(series) == expected_bin_tuples(tf, granularity)
        oracle = interval_days_oracle(table, "AdmitDate", "DischargeDate",
                                      tf, granularity)
        assert list(series.values) == oracle


def test_count_rule_counts_active_records():
    table = stay_table((d("2019-01-28"), d("2019-02-03")),
                       (d("2019-01-05"), d("2019-01-07")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-02-28")),
                 rule="count")
    assert series.values == (2, 1)


def test_eligibility_is_xfield_independent():
    """A stay spills into bins its admission date never touches."""
    table = stay_table((d("2018-12-30"), d("2019-01-05")))
    series = run(table, Timeframe(d("2019-01-01"), d("2019-01-31")))
    assert series.values == (4,)


def test_ids_argument_restricts_rows():
    table = stay_table((d("2019-01-10"), d("2019-01-12")),
                       (d("2019-01-20"), d("2019-01-23")))
    tf = Timeframe(d("2019-01-01"), d("2019-01-31"))
    assert run(table, tf, ids=[1]).values == (3,)


def test_routing_applies_where_clause():
    spec = MetricSpec(
        metric="Beds",
        measures=(MeasureSpec(name="icuDays",
                              where=(FilterClause("Ward", equals("icu")),),
                              start="AdmitDate", end="DischargeDate"),),
        yaggregates={"icuDays": "sum"},
    )
    rows = [
        {"AdmitDate": d("2019-01-10"), "DischargeDate": d("2019-01-12"),
         "Ward": "icu"},
        {"AdmitDate": d("2019-01-20"), "DischargeDate": d("2019-01-25"),
         "Ward": "hdu"},
    ]
    table = make_table(stay_dictionary(), rows)
    tf = Timeframe(d("2019-01-01"), d("2019-01-31"))
    series = series_for_measure(table, spec, "icuDays", "AdmitDate",
                                "month", tf)
    assert series.values == (2,)
