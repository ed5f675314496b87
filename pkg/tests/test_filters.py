"""Record filtering: where clauses, operators, valid lists."""

import random

from helpers import (
    d,
    random_measure,
    random_table,
    row_passes,
    t0_metric,
    t0_table,
)
from qualdash.mss import FilterClause, MeasureSpec, equals, isin, missing, \
    negate
from qualdash.aggregate.binning import Timeframe
from qualdash.aggregate.engine import filter_records

TF = Timeframe(d("2019-01-01"), d("2019-03-31"))


def test_deaths_measure():
    ids = filter_records(t0_table(), t0_metric().measure("DeathsInUnit"),
                         TF, "AdmitDate")
    assert ids == [1, 4]     # r2 and r5


def test_vacuous_conjunction_admits_everything():
    measure = MeasureSpec(name="all")
    ids = filter_records(t0_table(), measure, TF, "AdmitDate")
    assert ids == [0, 1, 2, 3, 4, 5]


def test_disjunction():
    measure = MeasureSpec(
        name="either",
        where=(FilterClause("DischargeStatus", equals("alive")),
               FilterClause("PrimReason", equals("bronchiolitis"))),
        operator="or",
    )
    ids = filter_records(t0_table(), measure, TF, "AdmitDate")
    assert ids == [0, 1, 2, 3]


def test_timeframe_bounds_are_inclusive():
    measure = MeasureSpec(name="all")
    jan = Timeframe(d("2019-01-05"), d("2019-01-20"))
    assert filter_records(t0_table(), measure, jan, "AdmitDate") == [0, 1]


def test_valid_list_excludes_missing_and_offlist():
    measure = MeasureSpec(name="all",
                          valid={"DischargeStatus": ("alive", "deceased")})
    ids = filter_records(t0_table(), measure, TF, "AdmitDate")
    assert 5 not in ids      # r6 has no recorded status
    assert ids == [0, 1, 2, 3, 4]


def test_missing_predicate():
    measure = MeasureSpec(
        name="unrecorded",
        where=(FilterClause("DischargeStatus", missing()),))
    assert filter_records(t0_table(), measure, TF, "AdmitDate") == [5]


def test_in_predicate():
    measure = MeasureSpec(
        name="for_either",
        where=(FilterClause("PrimReason", isin(["bronchiolitis", "other"])),))
    assert filter_records(t0_table(), measure, TF, "AdmitDate") == [1, 3]


def test_no_timeframe_means_all_rows():
    measure = MeasureSpec(name="all")
    ids = filter_records(t0_table(), measure, None, "AdmitDate")
    assert ids == [0, 1, 2, 3, 4, 5]


def test_equals_false_matches_missing_boolean():
    # not-recorded reads as not-done for yes/no questions
    from qualdash.mss import DataDictionary, FieldInfo
    from helpers import make_table
    table = make_table(
        DataDictionary({"D": FieldInfo("temporal", "date"),
                        "given": FieldInfo("boolean", "drug given")}),
        [{"D": d("2019-01-05"), "given": True},
         {"D": d("2019-01-06"), "given": False},
         {"D": d("2019-01-07"), "given": None}])
    measure = MeasureSpec(name="not_given",
                          where=(FilterClause("given", equals(False)),))
    assert filter_records(table, measure, TF, "D") == [1, 2]


def test_de_morgan_on_random_tables():
    """or over clauses == not(and over negated clauses), record for record."""
    rng = random.Random(90125)
    for _ in range(25):
        table = random_table(rng, 200)
        clauses = (
            FilterClause("Status", equals(rng.choice(["alpha", "beta"]))),
            FilterClause("Flag", equals(True)),
        )
        any_of = MeasureSpec(name="any", where=clauses, operator="or")
        none_of = MeasureSpec(
            name="none",
            where=tuple(FilterClause(c.field, negate(c.predicate))
                        for c in clauses),
            operator="and")
        tf = Timeframe(d("2017-01-01"), d("2019-12-31"))
        got_any = set(filter_records(table, any_of, tf, "EventDate"))
        got_none = set(filter_records(table, none_of, tf, "EventDate"))
        in_frame = {i for i, r in enumerate(table.rows)
                    if r["EventDate"] is not None}
        assert got_any == in_frame - got_none


def test_random_measures_against_oracle():
    rng = random.Random(5150)
    tf = Timeframe(d("2017-01-01"), d("2019-12-31"))
    for _ in range(40):
        table = random_table(rng, 300)
        measure = random_measure(rng, "count")
        got = filter_records(table, measure, tf, "EventDate")
        want = [i for i, row in enumerate(table.rows)
                if row["EventDate"] is not None
                and tf.start <= row["EventDate"] <= tf.end
                and row_passes(row, measure)]
        assert got == want
