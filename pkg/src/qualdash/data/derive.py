"""Derived fields: new columns computed per record from an expression tree.

The tree grammar, in JSON:

  {"field": "statin", "equals": false}       leaf predicate
  {"field": "status", "in": ["a", "b"]}
  {"field": "weight", "missing": true}
  {"not": <expr>}
  {"and": [<expr>, ...]}
  {"or": [<expr>, ...]}
  {"date_diff_days": ["DischargeDate", "AdmitDate"]}   first minus second

Leaf predicates reuse the exact matching semantics of filter clauses, so a
derived boolean and a where clause never disagree about Missing: comparing
a never-recorded value against a boolean literal reads as not-done (false),
any other comparison fails, and is_missing is the only test that is true.
date_diff_days yields a number of days, Missing if either operand is.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass
from typing import Any, Mapping

from ..mss import FieldInfo, Predicate, equals, isin, missing, negate
from .table import DataTable, Provenance, drop_fields


class DeriveError(Exception):
    pass


@dataclass(frozen=True)
class _Leaf:
    field: str
    predicate: Predicate

    def fields(self) -> set[str]:
        return {self.field}

    def evaluate(self, row: Mapping) -> bool:
        return self.predicate.matches(row.get(self.field))


@dataclass(frozen=True)
class _Combi:
    op: str  # "and" | "or" | "not"
    parts: tuple

    def fields(self) -> set[str]:
        out: set[str] = set()
        for p in self.parts:
            out |= p.fields()
        return out

    def evaluate(self, row: Mapping) -> bool:
        if self.op == "and":
            return all(p.evaluate(row) for p in self.parts)
        if self.op == "or":
            return any(p.evaluate(row) for p in self.parts)
        return not self.parts[0].evaluate(row)


@dataclass(frozen=True)
class _DateDiff:
    later: str
    earlier: str

    def fields(self) -> set[str]:
        return {self.later, self.earlier}

    def evaluate(self, row: Mapping):
        a = row.get(self.later)
        b = row.get(self.earlier)
        if not isinstance(a, datetime.date) or not isinstance(b, datetime.date):
            return None
        return (a - b).days


@dataclass(frozen=True)
class DerivedFieldSpec:
    name: str
    expression: Any  # _Leaf | _Combi | _DateDiff

    @property
    def result_type(self) -> str:
        return "quantitative" if isinstance(self.expression, _DateDiff) \
            else "boolean"

    def referenced_fields(self) -> set[str]:
        return self.expression.fields()


def _parse_expression(raw: Any, path: str):
    if not isinstance(raw, dict):
        raise DeriveError(f"{path}: expression must be an object")
    keys = set(raw)
    if "field" in keys:
        field = raw["field"]
        if not isinstance(field, str):
            raise DeriveError(f"{path}: 'field' must be a string")
        rest = keys - {"field"}
        if rest == {"equals"}:
            return _Leaf(field, equals(raw["equals"]))
        if rest == {"in"}:
            if not isinstance(raw["in"], list):
                raise DeriveError(f"{path}: 'in' takes a list")
            return _Leaf(field, isin(raw["in"]))
        if rest == {"missing"}:
            if raw["missing"] is not True:
                raise DeriveError(f"{path}: 'missing' takes true")
            return _Leaf(field, missing())
        raise DeriveError(f"{path}: leaf needs exactly one of equals/in/missing")
    if keys == {"not"}:
        return _Combi("not", (_parse_expression(raw["not"], path + ".not"),))
    if keys in ({"and"}, {"or"}):
        op = next(iter(keys))
        parts = raw[op]
        if not isinstance(parts, list) or not parts:
            raise DeriveError(f"{path}: '{op}' takes a non-empty list")
        return _Combi(op, tuple(_parse_expression(p, f"{path}.{op}[{i}]")
                                for i, p in enumerate(parts)))
    if keys == {"date_diff_days"}:
        operands = raw["date_diff_days"]
        if (not isinstance(operands, list) or len(operands) != 2 or
                not all(isinstance(f, str) for f in operands)):
            raise DeriveError(
                f"{path}: date_diff_days takes [later_field, earlier_field]")
        return _DateDiff(later=operands[0], earlier=operands[1])
    raise DeriveError(f"{path}: unrecognized expression {sorted(keys)!r}")


def parse_derivations(text: str) -> list[DerivedFieldSpec]:
    """Parse a derivations file: a list of {name, expression} objects."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeriveError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise DeriveError("derivations must be a list of {name, expression}")
    specs = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise DeriveError(f"derivations[{i}]: needs a 'name'")
        if "expression" not in entry:
            raise DeriveError(f"derivations[{i}]: needs an 'expression'")
        specs.append(DerivedFieldSpec(
            name=entry["name"],
            expression=_parse_expression(entry["expression"],
                                         f"derivations[{i}].expression")))
    return specs


def derive_fields(table: DataTable,
                  specs: list[DerivedFieldSpec]) -> DataTable:
    """Append one column per spec; the input columns are untouched.

    Name collisions with the existing schema and references to fields the
    table does not have are errors, caught before any work happens.
    """
    schema = table.schema
    names_so_far = set(schema.names())
    for spec in specs:
        if spec.name in names_so_far:
            raise DeriveError(f"derived field {spec.name!r} already exists")
        for f in spec.referenced_fields():
            if f not in names_so_far:
                raise DeriveError(
                    f"derived field {spec.name!r} references unknown "
                    f"field {f!r}")
        names_so_far.add(spec.name)
    new_schema = schema
    for spec in specs:
        new_schema = new_schema.extend(spec.name, FieldInfo(
            type=spec.result_type,
            description=f"Derived field {spec.name}"))
    rows = []
    for row in table.rows:
        new_row = dict(row)
        for spec in specs:
            # Evaluate against the growing row so a derivation can build on
            # an earlier one in the same batch.
            new_row[spec.name] = spec.expression.evaluate(new_row)
        rows.append(new_row)
    prov = table.provenance
    return DataTable(schema=new_schema, rows=tuple(rows),
                     provenance=Provenance(source=prov.source,
                                           loaded_at=prov.loaded_at,
                                           row_count=len(rows),
                                           unparseable=prov.unparseable))


def derive_and_replace(table: DataTable,
                       specs: list[DerivedFieldSpec]) -> DataTable:
    """derive_fields, but recompute columns that already exist.

    This is what a rerun of preprocessing wants: a previously derived
    column is dropped and rebuilt from the same definition instead of
    tripping the collision check.
    """
    existing = [s.name for s in specs if s.name in table.schema]
    if existing:
        table = drop_fields(table, existing)
    return derive_fields(table, specs)
