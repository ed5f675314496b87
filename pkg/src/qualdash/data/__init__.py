"""Tabular audit data: loading, typing, derivation and partitioning."""

from .dates import parse_date_value
from .table import (AnnualSplit, DataLoadError, DataTable, Provenance,
                    concat_tables, drop_fields, load_table, normalize_dates,
                    split_annual, write_table)
from .derive import (DeriveError, DerivedFieldSpec, derive_and_replace,
                     derive_fields, parse_derivations)
from .synth import SynthProfile, generate_synthetic, load_profile, profile_dictionary

__all__ = [
    "AnnualSplit", "DataLoadError", "DataTable", "DeriveError",
    "DerivedFieldSpec", "Provenance", "SynthProfile", "concat_tables",
    "derive_and_replace", "derive_fields", "drop_fields",
    "generate_synthetic", "load_profile", "load_table", "normalize_dates",
    "parse_date_value", "parse_derivations", "profile_dictionary",
    "split_annual", "write_table",
]
