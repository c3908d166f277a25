"""Origin-destination matrices, per-cell sampling rates, MAPE and the
disaggregation sweep."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    SchemaError,
    TravelSampleError,
    ValidationError,
)
from .records import MODES, PERIODS, PURPOSES, HouseholdRecord, TripRecord
from .smith import compute_stats, plan_from_table
from .stats import SizeSpec, coefficient_of_variation, interchange_rate

log = logging.getLogger(__name__)

SUPPRESSED = "suppressed"

DIMENSIONS = {"period": PERIODS, "mode": MODES, "purpose": PURPOSES}

# row order of the published disaggregation table
SWEEP_LEVELS = (
    ("by mode", ("mode",)),
    ("by purpose", ("purpose",)),
    ("by time", ("period",)),
    ("by time & mode", ("period", "mode")),
    ("by time & purpose", ("period", "purpose")),
    ("by purpose & mode", ("purpose", "mode")),
    ("by time, purpose & mode", ("period", "purpose", "mode")),
)


@dataclass(frozen=True)
class ODSlice:
    """Trip filter; ``None`` on a dimension matches every category."""

    period: str | None = None
    mode: str | None = None
    purpose: str | None = None

    def __post_init__(self):
        for dim in ("period", "mode", "purpose"):
            v = getattr(self, dim)
            if v is not None and v not in DIMENSIONS[dim]:
                raise ValidationError(f"unknown {dim} {v!r}")

    def matches(self, trip: TripRecord) -> bool:
        return (
            (self.period is None or trip.period == self.period)
            and (self.mode is None or trip.mode == self.mode)
            and (self.purpose is None or trip.purpose == self.purpose)
        )

    def to_dict(self) -> dict:
        return {"period": self.period, "mode": self.mode, "purpose": self.purpose}


@dataclass
class ODMatrix:
    origins: list[str]
    destinations: list[str]
    cells: np.ndarray
    suppressed: np.ndarray | None = None
    slice: ODSlice | None = None

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.shape != (len(self.origins), len(self.destinations)):
            raise SchemaError("cell array shape does not match labels")
        if self.suppressed is None:
            self.suppressed = np.zeros(self.cells.shape, dtype=bool)
        self.suppressed = np.asarray(self.suppressed, dtype=bool)
        if np.any(self.cells < 0):
            raise ValidationError("O-D cells must be nonnegative")

    def cell(self, origin: str, destination: str) -> float:
        return float(self.cells[self.origins.index(origin), self.destinations.index(destination)])

    def row_totals(self) -> np.ndarray:
        return np.where(self.suppressed, 0.0, self.cells).sum(axis=1)

    def column_totals(self) -> np.ndarray:
        return np.where(self.suppressed, 0.0, self.cells).sum(axis=0)

    def submatrix(self, origins: Sequence[str], destinations: Sequence[str] | None = None) -> "ODMatrix":
        destinations = list(origins) if destinations is None else list(destinations)
        ri = [self.origins.index(o) for o in origins]
        ci = [self.destinations.index(d) for d in destinations]
        return ODMatrix(list(origins), destinations, self.cells[np.ix_(ri, ci)],
                        self.suppressed[np.ix_(ri, ci)], self.slice)

    def available_values(self) -> np.ndarray:
        return self.cells[~self.suppressed]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["origin", *self.destinations])
        for i, o in enumerate(self.origins):
            w.writerow([o, *(SUPPRESSED if self.suppressed[i, j] else _fmt(self.cells[i, j])
                             for j in range(len(self.destinations)))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "origins": list(self.origins),
            "destinations": list(self.destinations),
            "cells": [[None if self.suppressed[i, j] else float(self.cells[i, j])
                       for j in range(len(self.destinations))] for i in range(len(self.origins))],
            "slice": self.slice.to_dict() if self.slice else None,
        }


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def build_od_matrix(
    trips: Iterable[TripRecord],
    partition: Mapping[str, str] | None = None,
    slice: ODSlice | None = None,
    labels: Sequence[str] | None = None,
) -> ODMatrix:
    """Weighted trip totals per (origin unit, destination unit).

    ``partition`` maps zones to regions; without it zones are the units.
    """
    trips = list(trips)
    if partition is None:
        partition = {z: z for t in trips for z in (t.origin_zone, t.destination_zone)}
    if labels is None:
        labels = sorted(set(partition.values()))
    index = {lab: i for i, lab in enumerate(labels)}
    cells = np.zeros((len(labels), len(labels)))
    for t in trips:
        for z in (t.origin_zone, t.destination_zone):
            if z not in partition:
                raise ValidationError(f"zone {z!r} is not mapped by the partition")
        if slice is not None and not slice.matches(t):
            continue
        cells[index[partition[t.origin_zone]], index[partition[t.destination_zone]]] += t.weight
    return ODMatrix(list(labels), list(labels), cells, slice=slice)


def cell_required_rates(matrix: ODMatrix, cv: float, spec: SizeSpec) -> np.ndarray:
    """Per-cell required sampling rate; NaN marks suppressed or zero cells."""
    out = np.full(matrix.cells.shape, np.nan)
    for (i, j), n in np.ndenumerate(matrix.cells):
        if not matrix.suppressed[i, j] and n > 0:
            out[i, j] = interchange_rate(n, cv, spec)
    return out


def group_totals(trips: Iterable[TripRecord], dims: Sequence[str]) -> dict[tuple, float]:
    for d in dims:
        if d not in DIMENSIONS:
            raise ValidationError(f"unknown grouping dimension {d!r}")
    totals: dict[tuple, float] = {}
    for t in trips:
        key = tuple(getattr(t, d) for d in dims)
        totals[key] = totals.get(key, 0.0) + t.weight
    return totals


def matrix_cv(source: ODMatrix | Iterable[TripRecord], dims: Sequence[str] = ("period", "mode", "purpose")) -> float:
    """CV of trip totals.

    For an :class:`ODMatrix` the unsuppressed cells are the values; for trips
    the values are the totals of each nonempty ``dims`` group.
    """
    if isinstance(source, ODMatrix):
        values = source.available_values()
    else:
        values = [v for v in group_totals(source, dims).values() if v > 0]
    if len([v for v in values if v > 0]) < 2:
        raise DegenerateInputError("need at least 2 nonzero groups for a matrix CV")
    return coefficient_of_variation(values)


def mape(estimate: ODMatrix, reference: ODMatrix) -> float:
    """Mean absolute percentage error over cells with a positive reference."""
    if estimate.origins != reference.origins or estimate.destinations != reference.destinations:
        raise SchemaError("matrices are not conformable")
    include = (reference.cells > 0) & ~reference.suppressed & ~estimate.suppressed
    if not include.any():
        raise DegenerateInputError("no cells with a positive reference value")
    r = reference.cells[include]
    e = estimate.cells[include]
    return float(np.mean(np.abs(e - r) / r) * 100.0)


# --- bundled published peak-period matrix ------------------------------

@dataclass
class PublishedMatrix:
    matrix: ODMatrix
    printed_row_totals: np.ndarray
    printed_column_totals: np.ndarray
    printed_grand_total: float

    def integrity(self, tolerance: float = 200.0) -> list[str]:
        """Discrepancies between recomputed and printed totals beyond ``tolerance``."""
        issues = []
        for name, got, printed, labels in (
            ("row", self.matrix.row_totals(), self.printed_row_totals, self.matrix.origins),
            ("column", self.matrix.column_totals(), self.printed_column_totals, self.matrix.destinations),
        ):
            for lab, g, p in zip(labels, got, printed):
                if abs(g - p) > tolerance:
                    issues.append(f"{name} {lab}: cells sum to {g:.0f}, printed {p:.0f}")
        grand = float(np.where(self.matrix.suppressed, 0, self.matrix.cells).sum())
        if abs(grand - self.printed_grand_total) > tolerance:
            issues.append(f"grand total {grand:.0f}, printed {self.printed_grand_total:.0f}")
        for msg in issues:
            log.warning("figure1 integrity: %s", msg)
        return issues


GTHA_CORE = (
    "City of Toronto",
    "Region of Durham",
    "Region of York",
    "Region of Peel",
    "Region of Halton",
    "City of Hamilton",
)


def figure1_csv_text() -> str:
    return resources.files("travelsample").joinpath("data/figure1.csv").read_text()


def parse_published_matrix(text: str) -> PublishedMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    if header[-1] != "Region Totals":
        raise SchemaError("published matrix needs a trailing 'Region Totals' column")
    dests = header[1:-1]
    origins, cells, supp, row_tot = [], [], [], []
    col_tot = None
    grand = None
    for r in rows[1:]:
        if r[0] == "Region Totals":
            col_tot = [float(x) for x in r[1:-1]]
            grand = float(r[-1])
            continue
        origins.append(r[0])
        vals = r[1:-1]
        cells.append([0.0 if v == SUPPRESSED else float(v) for v in vals])
        supp.append([v == SUPPRESSED for v in vals])
        row_tot.append(float(r[-1]))
    if col_tot is None:
        raise SchemaError("published matrix needs a 'Region Totals' row")
    m = ODMatrix(origins, dests, np.array(cells), np.array(supp))
    return PublishedMatrix(m, np.array(row_tot), np.array(col_tot), grand)


def load_figure1() -> PublishedMatrix:
    return parse_published_matrix(figure1_csv_text())


# --- disaggregation sweep --------------------------------------------------

@dataclass
class SweepRow:
    level: str
    dimensions: tuple[str, ...]
    n_categories: int = 0
    dropped_categories: int = 0
    c_star: float | None = None
    cv_max: float | None = None
    initial_size_F: float | None = None
    final_total: float | None = None
    final_total_rounded: int | None = None
    sampling_rate: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "dimensions": list(self.dimensions),
            "n_categories": self.n_categories,
            "dropped_categories": self.dropped_categories,
            "c_star": self.c_star,
            "cv_max": self.cv_max,
            "F": self.initial_size_F,
            "final_total": self.final_total,
            "final_total_rounded": self.final_total_rounded,
            "sampling_rate": self.sampling_rate,
            "error": self.error,
        }


@dataclass
class SweepResult:
    rows: list[SweepRow]
    population: float
    households: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "households": self.households,
            "rows": [r.to_dict() for r in self.rows],
            "warnings": list(self.warnings),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "n_categories", "c_star", "cv_max", "F",
                    "final_total_rounded", "sampling_rate", "error"])
        for r in self.rows:
            w.writerow([r.level, r.n_categories,
                        "" if r.c_star is None else repr(r.c_star),
                        "" if r.cv_max is None else repr(r.cv_max),
                        "" if r.initial_size_F is None else repr(r.initial_size_F),
                        "" if r.final_total_rounded is None else r.final_total_rounded,
                        "" if r.sampling_rate is None else repr(r.sampling_rate),
                        r.error or ""])
        return buf.getvalue()


def household_category_counts(
    households: Sequence[HouseholdRecord], trips: Iterable[TripRecord], dims: Sequence[str]
) -> tuple[list[tuple], np.ndarray]:
    """Matrix of unweighted trip counts, households x category combinations.

    Columns follow the full cross-product of the closed category sets.
    """
    cats = list(product(*(DIMENSIONS[d] for d in dims)))
    col = {c: j for j, c in enumerate(cats)}
    row = {h.household_id: i for i, h in enumerate(households)}
    counts = np.zeros((len(households), len(cats)))
    for t in trips:
        i = row.get(t.household_id)
        if i is None:
            continue
        counts[i, col[tuple(getattr(t, d) for d in dims)]] += 1
    return cats, counts


def sweep_level(
    households: Sequence[HouseholdRecord],
    trips: Sequence[TripRecord],
    dims: Sequence[str],
    spec: SizeSpec,
    population: float,
    *,
    cv_denominator: str = "overall",
    level: str | None = None,
) -> SweepRow:
    """One classification table: household trip counts per category of ``dims``.

    Each category's values are every household's number of trips in it; its
    frequency is its share of all trips.
    """
    dims = tuple(dims)
    row = SweepRow(level or " & ".join(dims), dims)
    cats, counts = household_category_counts(households, trips, dims)
    col_totals = counts.sum(axis=0)
    keep = col_totals > 0
    row.dropped_categories = int((~keep).sum())
    row.n_categories = int(keep.sum())
    try:
        total = col_totals.sum()
        if total <= 0:
            raise DegenerateInputError("no trips to classify")
        groups = {cats[j]: counts[:, j] for j in range(len(cats)) if keep[j]}
        freqs = {cats[j]: col_totals[j] / total for j in range(len(cats)) if keep[j]}
        table = compute_stats(groups, frequencies=freqs, cv_denominator=cv_denominator)
        plan = plan_from_table(table, spec, population=population)
    except TravelSampleError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    row.c_star = table.c_star
    row.cv_max = table.cv_max
    row.initial_size_F = plan.initial_size_F
    row.final_total = plan.final_total
    row.final_total_rounded = plan.final_total_rounded
    row.sampling_rate = plan.sampling_rate
    return row


def disaggregation_sweep(
    households: Sequence[HouseholdRecord],
    trips: Sequence[TripRecord],
    spec: SizeSpec,
    *,
    population: float | None = None,
    cv_denominator: str = "overall",
) -> SweepResult:
    """Required household sampling rate for each of the seven classification tables."""
    if population is None:
        population = math.fsum(h.weight for h in households)
    trips = list(trips)
    result = SweepResult([], population, len(households))
    for level, dims in SWEEP_LEVELS:
        r = sweep_level(households, trips, dims, spec, population,
                        cv_denominator=cv_denominator, level=level)
        if r.dropped_categories:
            msg = f"{level}: dropped {r.dropped_categories} empty category combinations"
            log.warning(msg)
            result.warnings.append(msg)
        result.rows.append(r)
    return result


def matrix_json(matrix: ODMatrix, rates: np.ndarray | None = None, **extra) -> str:
    out = matrix.to_dict()
    if rates is not None:
        out["required_rates"] = [[None if math.isnan(x) else float(x) for x in row] for row in rates]
    out.update(extra)
    return json.dumps(out, indent=2)
