import hashlib
import io
import logging
from collections import Counter

import pytest

from travelsample.errors import SchemaError, ValidationError
from travelsample.fixtures import fixture_texts
from travelsample.io import (
    FIXTURE_FILES,
    fixture_path,
    households_csv,
    ingest_households,
    ingest_trips,
    ingest_zones,
    load_manifest,
    trips_csv,
    zones_csv,
)
from travelsample.records import period_from_hhmm

HH_HEADER = "household_id,region,zone,size,income_class,vehicles,weight\n"
TRIP_HEADER = "household_id,origin_zone,destination_zone,mode,purpose,depart_hhmm,weight\n"


def text(s):
    return io.StringIO(s)


def test_ingest_two_households():
    hh = ingest_households(text(HH_HEADER + "a,R0,Z1,2,50,1,10\nb,R0,Z2,1,20,0,10\n"))
    assert [h.household_id for h in hh] == ["a", "b"]
    assert hh[0].size == 2 and hh[1].vehicles == 0 and hh[0].weight == 10.0


def test_weight_defaults_to_one():
    hh = ingest_households(text("household_id,region,zone,size,income_class,vehicles\na,R,Z,1,5,0\n"))
    assert hh[0].weight == 1.0
    trips = ingest_trips(text("household_id,origin_zone,destination_zone,mode,purpose,depart_hhmm\n"
                              "a,Z,Z,auto,work,0800\n"))
    assert trips[0].weight == 1.0


def test_duplicate_household_names_both_lines():
    with pytest.raises(ValidationError, match="lines 2 and 4"):
        ingest_households(text(HH_HEADER + "a,R,Z,1,5,0,1\nb,R,Z,1,5,0,1\na,R,Z,1,5,0,1\n"))


def test_bad_household_values():
    with pytest.raises(ValidationError, match="line 2"):
        ingest_households(text(HH_HEADER + "a,R,Z,zero,5,0,1\n"))
    with pytest.raises(ValidationError):
        ingest_households(text(HH_HEADER + "a,R,Z,0,5,0,1\n"))
    with pytest.raises(SchemaError):
        ingest_households(text("household_id,region\na,R\n"))


@pytest.mark.parametrize("hhmm,period", [
    ("0930", "peak"), ("1000", "offpeak"), ("0559", "offpeak"), ("0600", "peak"),
    ("1500", "peak"), ("1859", "peak"), ("1900", "offpeak"), ("0000", "offpeak"), ("2359", "offpeak"),
])
def test_period_boundaries(hhmm, period):
    assert period_from_hhmm(hhmm) == period


def test_bad_departure_time():
    with pytest.raises(ValidationError):
        period_from_hhmm("2460")
    with pytest.raises(ValidationError, match="line 3"):
        ingest_trips(text(TRIP_HEADER + "a,Z,Z,auto,work,0800,1\na,Z,Z,auto,work,8am,1\n"))


def test_unknown_mode_reports_line():
    with pytest.raises(ValidationError, match="line 3.*teleport"):
        ingest_trips(text(TRIP_HEADER + "a,Z,Z,auto,work,0800,1\na,Z,Z,teleport,work,0800,1\n"))


def test_orphan_trips_are_kept_and_reported(caplog):
    orphans = []
    with caplog.at_level(logging.WARNING):
        trips = ingest_trips(text(TRIP_HEADER + "a,Z,Z,auto,work,0800,1\nx,Z,Z,auto,home,1700,1\n"),
                             household_ids={"a"}, orphans=orphans)
    assert len(trips) == 2
    assert len(orphans) == 1 and "'x'" in orphans[0] and "line 3" in orphans[0]
    assert "unknown household" in caplog.text


def test_zone_conflict():
    assert ingest_zones(text("zone,region\nZ1,A\nZ1,A\n")) == {"Z1": "A"}
    with pytest.raises(ValidationError, match="two regions"):
        ingest_zones(text("zone,region\nZ1,A\nZ1,B\n"))


def test_round_trip(fixture_survey):
    hh, trips, zones = fixture_survey
    assert households_csv(ingest_households(text(households_csv(hh)))) == households_csv(hh)
    assert trips_csv(ingest_trips(text(trips_csv(trips)))) == trips_csv(trips)
    assert ingest_zones(text(zones_csv(zones))) == zones


def test_manifest_counts(fixture_survey):
    hh, trips, zones = fixture_survey
    m = load_manifest()
    assert m["survey_households"] == len(hh) == 8000
    assert m["survey_trips"] == len(trips) == 24116
    assert sum(h.trip_count for h in hh) == len(trips)
    assert dict(Counter(t.mode for t in trips)) == m["mode_counts"]
    assert dict(Counter(t.purpose for t in trips)) == m["purpose_counts"]
    assert dict(Counter(t.period for t in trips)) == m["period_counts"]
    assert m["mode_counts"] == {"auto": 19213, "transit": 2967, "active": 1472, "other": 464}
    assert all(h.weight == m["expansion_weight"] for h in hh)
    assert sum(h.weight for h in hh) == m["population_households"]
    assert set(zones.values()) == {h.region for h in hh}


def test_fixture_checksums():
    m = load_manifest()
    for name, digest in m["sha256"].items():
        path = fixture_path(next(k for k, v in FIXTURE_FILES.items() if v == name))
        assert hashlib.sha256(path.read_bytes()).hexdigest() == digest


@pytest.mark.slow
def test_fixture_regenerates_byte_identical():
    texts = fixture_texts()
    assert set(texts) == set(FIXTURE_FILES)
    for key, content in texts.items():
        assert fixture_path(key).read_text() == content, key
