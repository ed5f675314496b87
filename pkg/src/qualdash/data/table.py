"""DataTable: typed rows plus the dictionary slice that describes them.

Cells are typed by the data dictionary at load time; anything that will not
parse becomes Missing (None) and is counted in provenance.  Temporal cells
are special: the loader only converts the canonical ISO form, everything
else stays text until normalize_dates runs so the lossy conversions happen
in exactly one place.
"""

from __future__ import annotations

import csv
import datetime
import io
import logging
import math
import os
import re
from dataclasses import dataclass, field as dc_field, replace
from typing import Iterable, Mapping

from ..mss import DataDictionary, FieldInfo
from .dates import parse_date_value

log = logging.getLogger(__name__)

_INT = re.compile(r"^[+-]?\d+$")
_TRUE = {"true", "t", "1", "yes", "y"}
_FALSE = {"false", "f", "0", "no", "n"}


class DataLoadError(Exception):
    pass


@dataclass(frozen=True)
class Provenance:
    source: str
    loaded_at: str
    row_count: int
    unparseable: int = 0


@dataclass(frozen=True)
class DataTable:
    """Immutable rows with a schema.  Row identity is positional: a record's
    id is its index, stable for the lifetime of the table."""

    schema: DataDictionary
    rows: tuple[dict, ...]
    provenance: Provenance = dc_field(
        default=Provenance("<memory>", "", 0), compare=False)

    def __len__(self) -> int:
        return len(self.rows)

    def field_names(self) -> list[str]:
        return self.schema.names()


def _make_provenance(source: str, rows: int, unparseable: int) -> Provenance:
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return Provenance(source=source, loaded_at=stamp, row_count=rows,
                      unparseable=unparseable)


def _parse_cell(text: str, ftype: str) -> tuple[object, bool]:
    """Returns (value, ok).  ok is False only for non-empty unparseable text."""
    if text == "":
        return None, True
    if ftype == "quantitative":
        if _INT.match(text):
            return int(text), True
        try:
            v = float(text)
        except ValueError:
            return None, False
        if not math.isfinite(v):
            return None, False
        return v, True
    if ftype == "boolean":
        low = text.strip().lower()
        if low in _TRUE:
            return True, True
        if low in _FALSE:
            return False, True
        return None, False
    if ftype == "temporal":
        # Only the canonical form converts here; normalize_dates owns the
        # messy ones so their failures are counted exactly once.
        try:
            return datetime.date.fromisoformat(text), True
        except ValueError:
            return text, True
    return text, True  # nominal / ordinal


def _open_source(source) -> tuple[Iterable[str], str, bool]:
    if isinstance(source, (str, os.PathLike)):
        handle = open(source, "r", newline="", encoding="utf-8")
        return handle, str(source), True
    return source, getattr(source, "name", "<stream>"), False


def _detect_delimiter(header_line: str) -> str:
    if "\t" in header_line and "," not in header_line:
        return "\t"
    return ","


def load_table(source, dictionary: DataDictionary,
               aliases: Mapping[str, str] | None = None,
               delimiter: str | None = None,
               xfield: str | None = None) -> DataTable:
    """Read a delimited text file into a typed DataTable.

    Headers are alias-resolved before matching the dictionary; columns the
    dictionary does not describe are dropped.  The table's schema is the
    dictionary restricted to the columns actually present, in file order.
    When ``xfield`` is given its absence after aliasing is an error.
    """
    aliases = aliases or {}
    stream, name, owned = _open_source(source)
    try:
        text = stream.read() if hasattr(stream, "read") else "".join(stream)
    finally:
        if owned:
            stream.close()
    if not text.strip():
        raise DataLoadError(f"{name}: missing header row")
    if delimiter is None:
        delimiter = _detect_delimiter(text.splitlines()[0])
    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter)
    try:
        raw_header = next(reader)
    except StopIteration:
        raise DataLoadError(f"{name}: missing header row") from None
    resolved = [aliases.get(h.strip(), h.strip()) for h in raw_header]
    keep: list[tuple[int, str, str]] = []
    seen: set[str] = set()
    for i, h in enumerate(resolved):
        if h in dictionary and h not in seen:
            keep.append((i, h, dictionary.field_type(h)))
            seen.add(h)
        elif h not in dictionary:
            log.debug("%s: ignoring undescribed column %r", name, h)
    if xfield is not None and xfield not in seen:
        raise DataLoadError(f"{name}: column {xfield!r} absent after aliasing")
    unparseable = 0
    rows: list[dict] = []
    for cells in reader:
        if not cells:
            continue
        row: dict = {}
        for i, h, ftype in keep:
            text_value = cells[i] if i < len(cells) else ""
            value, ok = _parse_cell(text_value, ftype)
            if not ok:
                unparseable += 1
            row[h] = value
        rows.append(row)
    schema = dictionary.restrict([h for _, h, _ in keep])
    return DataTable(schema=schema, rows=tuple(rows),
                     provenance=_make_provenance(name, len(rows), unparseable))


def _format_cell(value) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, datetime.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(table: DataTable, target) -> None:
    """Serialize in the canonical form the loader reads back unchanged:
    ISO dates, true/false booleans, empty cell for Missing."""
    own = isinstance(target, (str, os.PathLike))
    handle = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(handle)
        names = table.field_names()
        writer.writerow(names)
        for row in table.rows:
            writer.writerow([_format_cell(row.get(n)) for n in names])
    finally:
        if own:
            handle.close()


def normalize_dates(table: DataTable, date_fields: Iterable[str]) -> DataTable:
    """Convert every listed temporal field to calendar dates.

    Text in the accepted formats converts; impossible or alien values
    become Missing and add to provenance.unparseable.  Running it twice is
    the same as running it once.
    """
    fields = list(date_fields)
    for f in fields:
        ftype = table.schema.field_type(f)
        if ftype is None:
            raise DataLoadError(f"cannot normalize unknown field {f!r}")
        if ftype != "temporal":
            raise DataLoadError(f"field {f!r} is {ftype}, not temporal")
    failures = 0
    rows: list[dict] = []
    changed = False
    for row in table.rows:
        new_row = None
        for f in fields:
            value = row.get(f)
            if value is None or isinstance(value, datetime.date):
                continue
            parsed = parse_date_value(value)
            if parsed is None:
                failures += 1
            if new_row is None:
                new_row = dict(row)
            new_row[f] = parsed
        if new_row is not None:
            changed = True
        rows.append(new_row if new_row is not None else row)
    if not changed:
        return table
    prov = replace(table.provenance,
                   unparseable=table.provenance.unparseable + failures)
    return DataTable(schema=table.schema, rows=tuple(rows), provenance=prov)


def drop_fields(table: DataTable, names: Iterable[str]) -> DataTable:
    gone = set(names)
    keep = [n for n in table.field_names() if n not in gone]
    rows = tuple({n: row.get(n) for n in keep} for row in table.rows)
    return DataTable(schema=table.schema.restrict(keep), rows=rows,
                     provenance=table.provenance)


def concat_tables(tables: list[DataTable]) -> DataTable:
    """Stack tables that share a schema; row ids renumber sequentially."""
    if not tables:
        raise ValueError("nothing to concatenate")
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise DataLoadError("cannot concatenate tables with different schemas")
    rows: list[dict] = []
    unparseable = 0
    sources = []
    for t in tables:
        rows.extend(t.rows)
        unparseable += t.provenance.unparseable
        sources.append(t.provenance.source)
    prov = _make_provenance("+".join(sources), len(rows), unparseable)
    return DataTable(schema=schema, rows=tuple(rows), provenance=prov)


@dataclass(frozen=True)
class AnnualSplit:
    years: Mapping[int, DataTable]
    undated: DataTable


def split_annual(table: DataTable, date_field: str) -> AnnualSplit:
    """Partition rows by the calendar year of ``date_field``.

    Rows whose value is not a date (Missing, or text that never got
    normalized) land in the reserved undated partition.  Every row goes to
    exactly one partition and keeps its original relative order.
    """
    if date_field not in table.schema:
        raise DataLoadError(f"unknown date field {date_field!r}")
    by_year: dict[int, list[dict]] = {}
    undated: list[dict] = []
    for row in table.rows:
        value = row.get(date_field)
        if isinstance(value, datetime.date):
            by_year.setdefault(value.year, []).append(row)
        else:
            undated.append(row)
    prov = table.provenance

    def _part(rows: list[dict], tag: str) -> DataTable:
        return DataTable(schema=table.schema, rows=tuple(rows),
                         provenance=Provenance(
                             source=f"{prov.source}#{tag}",
                             loaded_at=prov.loaded_at,
                             row_count=len(rows)))

    years = {y: _part(rows, str(y)) for y, rows in sorted(by_year.items())}
    return AnnualSplit(years=years, undated=_part(undated, "undated"))
