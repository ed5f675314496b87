"""Deterministic synthetic audit data for demos, tests and benchmarks.

Two built-in profiles mimic the shape of paediatric intensive care and
myocardial infarction audit extracts.  Same (seed, n, profile) in, same
table out, byte for byte once serialized; random.Random is the only
entropy source.
"""

from __future__ import annotations

import datetime
import json
import random
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Mapping

from ..mss import DataDictionary
from .table import DataTable, Provenance

_PROFILE_KINDS = ("picanet", "minap")

_DIAGNOSES = (
    "Myocardial infarction (ST elevation)",
    "Acute coronary syndrome (troponin positive)/ nSTEMI",
    "Chest pain of uncertain cause",
    "Other diagnosis",
)

_DRUGS = ("betablocker", "aspirin", "statin", "ACEInhibitor", "P2Y12Inhibitor")

# Value written when a profile injects a deliberately out-of-range code.
_INVALID_CODES = {"DischargeStatus": "unknown", "finalDiagnosis": "unconfirmed"}
_DEFAULT_INVALID = "invalid"


@dataclass(frozen=True)
class SynthProfile:
    """Shape of a synthetic extract: which audit, which years, how dirty."""

    kind: str
    audit: str
    start_year: int = 2017
    years: int = 3
    missing: Mapping[str, float] = dc_field(default_factory=dict)
    invalid: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.years < 1:
            raise ValueError("profile needs at least one year")


def load_profile(name_or_path: str) -> SynthProfile:
    """Load a profile by built-in name (picanet, minap) or JSON file path."""
    if name_or_path in _PROFILE_KINDS:
        text = resources.files("qualdash.profiles") \
            .joinpath(f"{name_or_path}.json").read_text()
    else:
        try:
            with open(name_or_path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except FileNotFoundError:
            raise ValueError(
                f"unknown profile {name_or_path!r}; expected one of "
                f"{_PROFILE_KINDS} or a JSON file path") from None
    raw = json.loads(text)
    return SynthProfile(
        kind=raw["kind"],
        audit=raw.get("audit", raw["kind"]),
        start_year=raw.get("start_year", 2017),
        years=raw.get("years", 3),
        missing=dict(raw.get("missing", {})),
        invalid=dict(raw.get("invalid", {})),
    )


def profile_dictionary(profile: SynthProfile) -> DataDictionary:
    """The data dictionary matching a profile's raw output columns."""
    text = resources.files("qualdash.fixtures") \
        .joinpath(f"{profile.kind}_dictionary.json").read_text()
    return DataDictionary.from_json(text)


def _weighted(rng: random.Random, pairs) -> str:
    roll = rng.random()
    acc = 0.0
    for value, weight in pairs:
        acc += weight
        if roll < acc:
            return value
    return pairs[-1][0]


def _picanet_row(rng: random.Random, first_day: datetime.date,
                 total_days: int) -> dict:
    admit = first_day + datetime.timedelta(days=rng.randrange(total_days))
    los = 1 + min(int(rng.expovariate(1 / 4.0)), 60)
    discharge = admit + datetime.timedelta(days=los)
    status = "deceased" if rng.random() < 0.06 else "alive"
    reason = _weighted(rng, (("surgery", 0.35), ("bronchiolitis", 0.20),
                             ("sepsis", 0.15), ("trauma", 0.10),
                             ("other", 0.20)))
    ad_type = _weighted(rng, (("planned", 0.40), ("unplanned", 0.60)))
    ethnic = _weighted(rng, (("white", 0.60), ("asian", 0.15),
                             ("black", 0.10), ("mixed", 0.08),
                             ("other", 0.07)))
    pim = round(min(rng.expovariate(1 / 3.0), 40.0), 2)
    smr = round(rng.lognormvariate(0.0, 0.25), 3)
    vent_start = vent_end = None
    if rng.random() < 0.55:
        offset = rng.randrange(los)
        vent_start = admit + datetime.timedelta(days=offset)
        vent_end = vent_start + datetime.timedelta(
            days=rng.randrange(los - offset + 1))
    return {
        "AdmitDate": admit,
        "DischargeDate": discharge,
        "DischargeStatus": status,
        "PrimReason": reason,
        "AdType": ad_type,
        "Ethnic": ethnic,
        "PIMScore": pim,
        "SMR": smr,
        "ventStart": vent_start,
        "ventEnd": vent_end,
    }


def _minap_row(rng: random.Random, first_day: datetime.date,
               total_days: int) -> dict:
    admit = first_day + datetime.timedelta(days=rng.randrange(total_days))
    diagnosis = _weighted(rng, ((_DIAGNOSES[0], 0.30), (_DIAGNOSES[1], 0.30),
                                (_DIAGNOSES[2], 0.25), (_DIAGNOSES[3], 0.15)))
    call_time = admit - datetime.timedelta(days=rng.random() < 0.15)
    balloon_time = None
    door_to_balloon = None
    if diagnosis == _DIAGNOSES[0] and rng.random() < 0.85:
        balloon_time = admit + datetime.timedelta(days=rng.random() < 0.10)
        door_to_balloon = rng.randrange(45, 400)
    row = {
        "AdmitDate": admit,
        "finalDiagnosis": diagnosis,
        "callTime": call_time,
        "balloonTime": balloon_time,
        "doorToBalloon": door_to_balloon,
    }
    for drug in _DRUGS:
        row[drug] = rng.random() < 0.85
    return row


def generate_synthetic(seed: int, n: int, profile: SynthProfile) -> DataTable:
    """Generate n records following the profile, deterministically.

    Missingness and invalid-code rates apply per field after the clean
    values are drawn, so the same seed keeps the same underlying cohort at
    different dirtiness settings for a given draw order.
    """
    if n < 0:
        raise ValueError("record count must be non-negative")
    rng = random.Random(seed)
    first_day = datetime.date(profile.start_year, 1, 1)
    last_day = datetime.date(profile.start_year + profile.years - 1, 12, 31)
    total_days = (last_day - first_day).days + 1
    make_row = _picanet_row if profile.kind == "picanet" else _minap_row
    schema = profile_dictionary(profile)
    rows = []
    for _ in range(n):
        row = make_row(rng, first_day, total_days)
        for field_name, rate in profile.missing.items():
            if field_name in row and rng.random() < rate:
                row[field_name] = None
        for field_name, rate in profile.invalid.items():
            if field_name in row and row[field_name] is not None \
                    and rng.random() < rate:
                row[field_name] = _INVALID_CODES.get(field_name,
                                                     _DEFAULT_INVALID)
        rows.append(row)
    prov = Provenance(source=f"synthetic:{profile.kind}:seed={seed}",
                      loaded_at="", row_count=n)
    return DataTable(schema=schema, rows=tuple(rows), provenance=prov)
