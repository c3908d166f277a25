"""Regenerate the bundled synthetic survey fixture.

The fixture is the small-city survey: an 8,000 household random sample of a
200,000 household synthetic population, with population-level reference
marginals for the audit variables. Output is byte-stable for a given seed.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

from .io import FIXTURE_FILES, households_csv, trips_csv, zones_csv
from .montecarlo import SMALL_CITY, SMALL_CITY_SURVEY_SIZE, SynthPopulation, small_city_survey
from .records import AUDIT_VARIABLES, MODES, PERIODS, PURPOSES
from .representativeness import MarginalTable, sample_marginals, write_marginals_csv

SCHEMA_VERSION = 1


def reference_marginals(population: SynthPopulation) -> dict[str, list[MarginalTable]]:
    """Population counts per audit category for the study area ("") and each region."""
    rows = population.household_rows()
    out = {"": sample_marginals(rows, AUDIT_VARIABLES)[0]}
    for region in population.region_names:
        subset = [r for r in rows if r["region"] == region]
        out[region] = sample_marginals(subset, AUDIT_VARIABLES)[0]
    return out


def _counts(codes, labels) -> dict[str, int]:
    c = Counter(int(x) for x in codes)
    return {label: c.get(i, 0) for i, label in enumerate(labels)}


def fixture_texts() -> dict[str, str]:
    """File name key -> file contents for every bundled fixture file."""
    population, survey = small_city_survey()
    texts = {
        "households": households_csv(survey.household_records()),
        "trips": trips_csv(survey.trip_records()),
        "zones": zones_csv(survey.partition()),
        "reference": write_marginals_csv(reference_marginals(population)),
    }
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": SMALL_CITY.to_dict(),
        "population_households": population.n_households,
        "survey_households": SMALL_CITY_SURVEY_SIZE,
        "survey_seed": SMALL_CITY.seed + 1,
        "sampling": "simple random sample of households",
        "expansion_weight": survey.hh_weight,
        "survey_trips": survey.n_trips,
        "realized_trip_rate_cv": round(survey.realized_cv(), 6),
        "mode_counts": _counts(survey.trip_mode, MODES),
        "purpose_counts": _counts(survey.trip_purpose, PURPOSES),
        "period_counts": _counts(survey.trip_period, PERIODS),
        "sha256": {
            FIXTURE_FILES[k]: hashlib.sha256(v.encode()).hexdigest() for k, v in texts.items()
        },
    }
    texts["manifest"] = json.dumps(manifest, indent=2) + "\n"
    return texts


def write_fixtures(directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for key, text in fixture_texts().items():
        path = out / FIXTURE_FILES[key]
        path.write_text(text)
        written.append(path)
    return written
