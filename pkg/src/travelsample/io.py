"""CSV ingestion and emission for households, trips, zones and fixtures."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import SchemaError, ValidationError
from .records import HouseholdRecord, TripRecord, attach_trip_counts, period_from_hhmm

log = logging.getLogger(__name__)

HOUSEHOLD_FIELDS = ("household_id", "region", "zone", "size", "income_class", "vehicles", "weight")
TRIP_FIELDS = ("household_id", "origin_zone", "destination_zone", "mode", "purpose", "depart_hhmm", "weight")
ZONE_FIELDS = ("zone", "region")

FIXTURE_FILES = {
    "households": "fixture_households.csv",
    "trips": "fixture_trips.csv",
    "zones": "fixture_zones.csv",
    "reference": "fixture_reference.csv",
    "manifest": "fixture_manifest.json",
}


def _open_text(source: str | os.PathLike | io.StringIO):
    if isinstance(source, io.StringIO):
        return source
    return open(source, newline="")


def _reader(fh, required: Sequence[str], optional: Sequence[str] = ()) -> csv.DictReader:
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [f for f in required if f not in header]
    if missing:
        raise SchemaError(f"CSV header lacks {missing}; expected {list(required) + list(optional)}")
    return reader


def ingest_households(source) -> list[HouseholdRecord]:
    """Read and validate a household CSV; ``weight`` defaults to 1 when absent."""
    records: list[HouseholdRecord] = []
    seen: dict[str, int] = {}
    with _open_text(source) as fh:
        reader = _reader(fh, HOUSEHOLD_FIELDS[:-1], ("weight",))
        for lineno, row in enumerate(reader, start=2):
            hid = (row.get("household_id") or "").strip()
            if not hid:
                raise ValidationError(f"line {lineno}: empty household_id")
            if hid in seen:
                raise ValidationError(
                    f"duplicate household_id {hid!r} on lines {seen[hid]} and {lineno}"
                )
            try:
                weight = row.get("weight")
                rec = HouseholdRecord(
                    household_id=hid,
                    region=row["region"],
                    zone=row["zone"],
                    size=int(row["size"]),
                    income_class=row["income_class"],
                    vehicles=int(row["vehicles"]),
                    weight=float(weight) if weight not in (None, "") else 1.0,
                )
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            seen[hid] = lineno
            records.append(rec)
    return records


def ingest_trips(
    source,
    household_ids: Iterable[str] | None = None,
    orphans: list[str] | None = None,
) -> list[TripRecord]:
    """Read and validate a trip CSV, deriving the period from ``depart_hhmm``.

    When ``household_ids`` is given, trips of unknown households are kept and
    reported through ``orphans`` and the log.
    """
    known = set(household_ids) if household_ids is not None else None
    trips: list[TripRecord] = []
    with _open_text(source) as fh:
        reader = _reader(fh, TRIP_FIELDS[:-1], ("weight",))
        for lineno, row in enumerate(reader, start=2):
            try:
                depart = row["depart_hhmm"].strip()
                if not depart.isdigit() or len(depart) > 4:
                    raise ValueError(f"depart_hhmm must be HHMM in 0000-2359, got {depart!r}")
                weight = row.get("weight")
                trip = TripRecord(
                    household_id=row["household_id"],
                    origin_zone=row["origin_zone"],
                    destination_zone=row["destination_zone"],
                    mode=row["mode"],
                    purpose=row["purpose"],
                    period=period_from_hhmm(depart),
                    weight=float(weight) if weight not in (None, "") else 1.0,
                    depart_hhmm=int(depart),
                )
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
            if known is not None and trip.household_id not in known:
                msg = f"line {lineno}: trip references unknown household {trip.household_id!r}"
                log.warning(msg)
                if orphans is not None:
                    orphans.append(msg)
            trips.append(trip)
    return trips


def ingest_zones(source) -> dict[str, str]:
    """Zone-to-region partition from a ``zone,region`` CSV."""
    out: dict[str, str] = {}
    with _open_text(source) as fh:
        for lineno, row in enumerate(_reader(fh, ZONE_FIELDS), start=2):
            z = row["zone"]
            if z in out and out[z] != row["region"]:
                raise ValidationError(f"line {lineno}: zone {z!r} mapped to two regions")
            out[z] = row["region"]
    return out


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def households_csv(records: Sequence[HouseholdRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HOUSEHOLD_FIELDS)
    for h in records:
        w.writerow([h.household_id, h.region, h.zone, h.size, h.income_class, h.vehicles, _num(h.weight)])
    return buf.getvalue()


def trips_csv(records: Sequence[TripRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIP_FIELDS)
    for t in records:
        w.writerow([t.household_id, t.origin_zone, t.destination_zone, t.mode, t.purpose,
                    f"{t.depart_hhmm:04d}", _num(t.weight)])
    return buf.getvalue()


def zones_csv(partition: dict[str, str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ZONE_FIELDS)
    for z in sorted(partition):
        w.writerow([z, partition[z]])
    return buf.getvalue()


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("travelsample").joinpath("data", FIXTURE_FILES[name])))


def load_fixture() -> tuple[list[HouseholdRecord], list[TripRecord], dict[str, str]]:
    """The bundled synthetic survey, with household trip counts attached."""
    households = ingest_households(fixture_path("households"))
    trips = ingest_trips(fixture_path("trips"))
    zones = ingest_zones(fixture_path("zones"))
    return attach_trip_counts(households, trips), trips, zones


def load_manifest() -> dict:
    return json.loads(fixture_path("manifest").read_text())
