"""Category distributions over the card cohort."""

import random

from helpers import d, make_table, row_passes, t0_metric, t0_table, \
    random_table, random_measure
from qualdash.mss import DataDictionary, FieldInfo, FilterClause, \
    MeasureSpec, MetricSpec, SubsidiaryConfig, equals
from qualdash.aggregate.binning import Timeframe
from qualdash.aggregate.engine import Selection, breakdown, cohort_ids

TF = Timeframe(d("2019-01-01"), d("2019-03-31"))


def entries_of(dist):
    return {e.value: e.count for e in dist.entries}


def test_t0_full_cohort():
    # cohort excludes the record with a missing discharge status
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate")
    assert dist.total == 5
    assert entries_of(dist) == {"surgery": 3, "bronchiolitis": 1, "other": 1}


def test_sorted_by_count_then_label():
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate")
    assert [e.value for e in dist.entries] == \
        ["surgery", "bronchiolitis", "other"]


def test_february_brush():
    sel = Selection.time_bins([d("2019-02-01")], "month")
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate",
                     sel)
    assert dist.total == 3
    assert entries_of(dist) == {"surgery": 2, "other": 1}
    shares = {e.value: e.share for e in dist.entries}
    assert abs(shares["surgery"] - 2 / 3) < 1e-12
    assert abs(shares["other"] - 1 / 3) < 1e-12


def test_empty_bin_yields_empty_distribution():
    # March admits only the record that both measures reject
    sel = Selection.time_bins([d("2019-03-01")], "month")
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate",
                     sel)
    assert dist.total == 0
    assert dist.entries == ()


def test_missing_category_value_grouped():
    ddict = DataDictionary({"D": FieldInfo("temporal", "date"),
                            "R": FieldInfo("nominal", "reason")})
    table = make_table(ddict, [
        {"D": d("2019-01-05"), "R": "a"},
        {"D": d("2019-01-06"), "R": None},
        {"D": d("2019-01-07"), "R": None},
    ])
    spec = MetricSpec(metric="M",
                      measures=(MeasureSpec(name="all"),),
                      yaggregates={"all": "count"})
    dist = breakdown(table, spec, "R", TF, "D")
    assert entries_of(dist) == {None: 2, "a": 1}
    labels = [e.to_json()["label"] for e in dist.entries]
    assert labels == ["(missing)", "a"]


def test_category_selection_restricts_same_field():
    sel = Selection.category("PrimReason", "surgery")
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate",
                     sel)
    assert entries_of(dist) == {"surgery": 3}
    assert dist.entries[0].share == 1.0


def test_record_id_selection_conjoins():
    sel = Selection.records([0, 1])
    dist = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate",
                     sel)
    assert entries_of(dist) == {"surgery": 1, "bronchiolitis": 1}
    narrowed = sel.with_category("PrimReason", "surgery")
    dist2 = breakdown(t0_table(), t0_metric(), "PrimReason", TF, "AdmitDate",
                      narrowed)
    assert entries_of(dist2) == {"surgery": 1}


def test_shares_sum_to_one():
    rng = random.Random(4401)
    for _ in range(20):
        table = random_table(rng, rng.randint(5, 60))
        spec = MetricSpec(
            metric="M",
            measures=(random_measure(rng, "count"),),
            yaggregates={"probe": "count"},
            subsidiary=SubsidiaryConfig(categories=("Status",)))
        tf = Timeframe(d("2017-01-01"), d("2019-12-31"))
        dist = breakdown(table, spec, "Status", tf, "EventDate")
        if dist.total:
            assert abs(sum(e.share for e in dist.entries) - 1.0) < 1e-9
            assert sum(e.count for e in dist.entries) == dist.total
        else:
            assert dist.entries == ()


def test_total_matches_cohort_size():
    rng = random.Random(77)
    for _ in range(10):
        table = random_table(rng, 40)
        spec = MetricSpec(
            metric="M",
            measures=(random_measure(rng, "count"),),
            yaggregates={"probe": "count"})
        tf = Timeframe(d("2017-01-01"), d("2019-12-31"))
        dist = breakdown(table, spec, "Status", tf, "EventDate")
        assert dist.total == len(cohort_ids(table, spec, tf, "EventDate"))
