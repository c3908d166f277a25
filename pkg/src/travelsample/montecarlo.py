"""Synthetic populations and a household-sampling simulator.

The simulator is the empirical check on the analytic interchange rates: it
repeatedly draws simple random samples of households, expands them by the
inverse sampling fraction and measures how often each O-D cell estimate lands
within the promised relative margin.

Each replication draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(stream, replication))``, so results do not
depend on how replications are spread over worker threads.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError
from .records import (
    MODES,
    PERIODS,
    PURPOSES,
    HouseholdRecord,
    TripRecord,
    size_class,
    vehicle_class,
)
from .stats import SizeSpec

log = logging.getLogger(__name__)

DEFAULT_MODAL_SPLIT = {"auto": 0.70, "transit": 0.18, "active": 0.09, "other": 0.03}
DEFAULT_PURPOSE_SPLIT = {"work": 0.22, "home": 0.40, "school": 0.10, "recreation": 0.18, "other": 0.10}
SIZE_PROBS = (0.27, 0.33, 0.16, 0.15, 0.06, 0.03)  # 1..6 persons

_PEAK_MINUTES = np.concatenate([np.arange(360, 600), np.arange(900, 1140)])
_OFFPEAK_MINUTES = np.setdiff1d(np.arange(1440), _PEAK_MINUTES)


@dataclass(frozen=True)
class SynthConfig:
    n_households: int = 8000
    n_zones: int = 60
    heterogeneity: float = 0.7
    modal_split: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MODAL_SPLIT))
    purpose_split: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PURPOSE_SPLIT))
    peak_share: float = 0.45
    seed: int = 20160111
    n_regions: int = 6
    mean_trips: float = 3.0
    gravity_beta: float = 3.0
    # share of trip-rate variation explained by household attributes
    attribute_loading: float = 0.6

    def __post_init__(self):
        if self.n_households < 1 or self.n_zones < 1 or self.n_regions < 1:
            raise ConfigError("n_households, n_zones and n_regions must be positive")
        if self.n_regions > self.n_zones:
            raise ConfigError("n_regions cannot exceed n_zones")
        if self.heterogeneity < 0:
            raise ConfigError("heterogeneity must be nonnegative")
        if self.mean_trips <= 0:
            raise ConfigError("mean_trips must be positive; a CV is undefined at mean 0")
        if not 0.0 <= self.peak_share <= 1.0:
            raise ConfigError("peak_share must lie in [0, 1]")
        if not 0.0 <= self.attribute_loading <= 1.0:
            raise ConfigError("attribute_loading must lie in [0, 1]")
        for name, split, cats in (("modal_split", self.modal_split, MODES),
                                  ("purpose_split", self.purpose_split, PURPOSES)):
            if set(split) != set(cats):
                raise ConfigError(f"{name} must cover exactly {cats}")
            if any(v < 0 for v in split.values()) or abs(math.fsum(split.values()) - 1.0) > 1e-9:
                raise ConfigError(f"{name} must be nonnegative and sum to 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modal_split"] = dict(self.modal_split)
        d["purpose_split"] = dict(self.purpose_split)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SynthPopulation:
    """Column-oriented households and trips."""

    config: SynthConfig
    region_names: list[str]
    zone_region: np.ndarray
    hh_zone: np.ndarray
    hh_size: np.ndarray
    hh_income: np.ndarray
    hh_vehicles: np.ndarray
    hh_trips: np.ndarray
    trip_household: np.ndarray
    trip_origin: np.ndarray
    trip_destination: np.ndarray
    trip_mode: np.ndarray
    trip_purpose: np.ndarray
    trip_depart: np.ndarray
    trip_period: np.ndarray
    trip_rate_scale: float = 0.0
    hh_weight: float = 1.0

    @property
    def n_households(self) -> int:
        return len(self.hh_zone)

    @property
    def n_trips(self) -> int:
        return len(self.trip_household)

    def subset(self, households: np.ndarray, hh_weight: float | None = None) -> "SynthPopulation":
        """Households at the given indices (re-numbered) and their trips."""
        households = np.sort(np.asarray(households, dtype=np.int64))
        new_index = np.full(self.n_households, -1, dtype=np.int64)
        new_index[households] = np.arange(len(households))
        keep = new_index[self.trip_household] >= 0
        return SynthPopulation(
            config=self.config,
            region_names=self.region_names,
            zone_region=self.zone_region,
            hh_zone=self.hh_zone[households],
            hh_size=self.hh_size[households],
            hh_income=self.hh_income[households],
            hh_vehicles=self.hh_vehicles[households],
            hh_trips=self.hh_trips[households],
            trip_household=new_index[self.trip_household[keep]],
            trip_origin=self.trip_origin[keep],
            trip_destination=self.trip_destination[keep],
            trip_mode=self.trip_mode[keep],
            trip_purpose=self.trip_purpose[keep],
            trip_depart=self.trip_depart[keep],
            trip_period=self.trip_period[keep],
            trip_rate_scale=self.trip_rate_scale,
            hh_weight=self.hh_weight if hh_weight is None else hh_weight,
        )

    def realized_cv(self) -> float:
        t = self.hh_trips.astype(float)
        return float(t.std() / t.mean()) if t.mean() > 0 else 0.0

    def zone_label(self, z: int) -> str:
        return f"Z{z:03d}"

    def partition(self) -> dict[str, str]:
        return {self.zone_label(z): self.region_names[r] for z, r in enumerate(self.zone_region)}

    def household_records(self) -> list[HouseholdRecord]:
        return [
            HouseholdRecord(
                household_id=f"H{i:06d}",
                region=self.region_names[self.zone_region[z]],
                zone=self.zone_label(z),
                size=int(self.hh_size[i]),
                income_class=str(int(self.hh_income[i])),
                vehicles=int(self.hh_vehicles[i]),
                weight=self.hh_weight,
                trip_count=int(self.hh_trips[i]),
            )
            for i, z in enumerate(self.hh_zone)
        ]

    def trip_records(self) -> list[TripRecord]:
        return [
            TripRecord(
                household_id=f"H{self.trip_household[k]:06d}",
                origin_zone=self.zone_label(self.trip_origin[k]),
                destination_zone=self.zone_label(self.trip_destination[k]),
                mode=MODES[self.trip_mode[k]],
                purpose=PURPOSES[self.trip_purpose[k]],
                period=PERIODS[self.trip_period[k]],
                weight=self.hh_weight,
                depart_hhmm=int(self.trip_depart[k]),
            )
            for k in range(self.n_trips)
        ]

    def mode_users(self) -> np.ndarray:
        """Boolean households x modes matrix: did the household use the mode."""
        used = np.zeros((self.n_households, len(MODES)), dtype=bool)
        used[self.trip_household, self.trip_mode] = True
        return used

    def household_rows(self) -> list[dict]:
        """Household-level microdata rows for representativeness audits."""
        used = self.mode_users()
        names = np.array(self.region_names, dtype=object)[self.zone_region[self.hh_zone]]
        return [
            {
                "region": names[i],
                "household_size": size_class(int(self.hh_size[i])),
                "vehicles": vehicle_class(int(self.hh_vehicles[i])),
                "mode_users": tuple(m for j, m in enumerate(MODES) if used[i, j]),
                "weight": self.hh_weight,
            }
            for i in range(self.n_households)
        ]

    def stratum_codes(self) -> np.ndarray:
        """Household size class x vehicle class code, for proportional sampling."""
        size = np.minimum(self.hh_size, 6)
        size_cls = np.select([size <= 3, size <= 5], [size - 1, 3], 4)
        veh_cls = np.minimum(self.hh_vehicles, 2)
        return size_cls * 3 + veh_cls


def _standardize(x: np.ndarray) -> np.ndarray:
    s = x.std()
    return (x - x.mean()) / s if s > 0 else np.zeros_like(x, dtype=float)


def _trip_counts(score: np.ndarray, mean: float, sigma: float) -> np.ndarray:
    return np.rint(mean * np.exp(sigma * score - sigma * sigma / 2.0)).astype(np.int64)


def _cv(x: np.ndarray) -> float:
    m = x.mean()
    return float(x.std() / m) if m > 0 else math.inf


def _tune_sigma(score: np.ndarray, mean: float, target: float) -> float:
    if target == 0:
        return 0.0
    lo, hi = 0.0, 4.0
    if _cv(_trip_counts(score, mean, hi)) < target:
        raise ConfigError(f"heterogeneity {target} is unattainable with mean_trips={mean}")
    sigma = math.sqrt(math.log1p(target * target))
    for _ in range(100):
        cv = _cv(_trip_counts(score, mean, sigma))
        if abs(cv - target) <= 0.005 * target:
            break
        if cv < target:
            lo = sigma
        else:
            hi = sigma
        sigma = (lo + hi) / 2.0
    return sigma


def synth_population(config: SynthConfig) -> SynthPopulation:
    """Generate a synthetic population deterministically from ``config.seed``.

    Household trip counts are rounded lognormal draws whose log-scale spread
    is tuned so the realized CV of trip counts matches ``heterogeneity``; the
    underlying score mixes household attributes with idiosyncratic noise, so
    strata built on size, income and vehicles differ in mean and spread.
    """
    c = config
    rng = np.random.default_rng(c.seed)
    R, Z, H = c.n_regions, c.n_zones, c.n_households

    # zones cluster around region centres on a circle; region 0 is central
    zone_region = np.arange(Z) * R // Z
    angle = 2 * np.pi * np.arange(R) / max(R - 1, 1)
    centres = np.column_stack([np.cos(angle), np.sin(angle)]) * 0.6
    centres[0] = 0.0
    xy = centres[zone_region] + rng.normal(scale=0.15, size=(Z, 2))
    zone_size = rng.lognormal(0.0, 0.6, size=Z)
    zone_size[zone_region == 0] *= 2.5

    hh_zone = rng.choice(Z, size=H, p=zone_size / zone_size.sum())
    hh_size = rng.choice(np.arange(1, 7), size=H, p=SIZE_PROBS)
    hh_vehicles = np.minimum(rng.poisson(0.35 + 0.45 * hh_size), 4)
    hh_income = np.rint(rng.lognormal(np.log(45.0) + 0.18 * hh_vehicles, 0.45)).astype(np.int64)
    hh_income = np.maximum(hh_income, 5)

    attr = _standardize(0.6 * _standardize(hh_size.astype(float))
                        + 0.25 * _standardize(hh_vehicles.astype(float))
                        + 0.15 * _standardize(np.log(hh_income)))
    noise = rng.standard_normal(H)
    w = c.attribute_loading
    score = _standardize(w * attr + math.sqrt(1 - w * w) * noise)
    sigma = _tune_sigma(score, c.mean_trips, c.heterogeneity)
    hh_trips = _trip_counts(score, c.mean_trips, sigma)

    trip_household = np.repeat(np.arange(H), hh_trips)
    T = len(trip_household)
    home = hh_zone[trip_household]

    # carless households rarely drive; owners absorb the difference so the
    # expected overall split still equals modal_split
    base_mode = np.array([c.modal_split[m] for m in MODES])
    carless = base_mode * np.array([0.15, 1.0, 1.0, 1.0])
    carless /= carless.sum()
    carless_share = float(np.mean(hh_vehicles[trip_household] == 0)) if T else 0.0
    owner = base_mode
    if 0.0 < carless_share < 1.0:
        owner = np.clip((base_mode - carless_share * carless) / (1.0 - carless_share), 0.0, None)
        owner /= owner.sum()
    mode_p = np.vstack([carless, owner])
    has_car = (hh_vehicles[trip_household] > 0).astype(np.int64)
    u = rng.random(T)
    cum = np.cumsum(mode_p, axis=1)[has_car]
    trip_mode = (u[:, None] >= cum[:, :-1]).sum(axis=1).astype(np.int64)

    purpose_p = np.array([c.purpose_split[p] for p in PURPOSES])
    trip_purpose = rng.choice(len(PURPOSES), size=T, p=purpose_p)

    is_peak = rng.random(T) < c.peak_share
    minute = np.where(
        is_peak,
        rng.choice(_PEAK_MINUTES, size=T),
        rng.choice(_OFFPEAK_MINUTES, size=T),
    )
    trip_depart = (minute // 60) * 100 + minute % 60
    trip_period = np.where(is_peak, 0, 1).astype(np.int64)

    dist = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    attraction = zone_size[None, :] * np.exp(-c.gravity_beta * dist)
    gravity = attraction / attraction.sum(axis=1, keepdims=True)

    def draw_from(origins: np.ndarray) -> np.ndarray:
        out = np.empty(len(origins), dtype=np.int64)
        uu = rng.random(len(origins))
        for z in range(Z):
            sel = np.flatnonzero(origins == z)
            if sel.size:
                cdf = np.cumsum(gravity[z])
                out[sel] = np.minimum(np.searchsorted(cdf, uu[sel] * cdf[-1], side="right"), Z - 1)
        return out

    returning = trip_purpose == PURPOSES.index("home")
    from_home = rng.random(T) < 0.6
    away = draw_from(home)
    trip_origin = np.where(returning | ~from_home, away, home)
    trip_destination = np.where(returning, home, draw_from(trip_origin))

    return SynthPopulation(
        config=c,
        region_names=[f"R{r}" for r in range(R)],
        zone_region=zone_region,
        hh_zone=hh_zone,
        hh_size=hh_size,
        hh_income=hh_income,
        hh_vehicles=hh_vehicles,
        hh_trips=hh_trips,
        trip_household=trip_household,
        trip_origin=trip_origin,
        trip_destination=trip_destination,
        trip_mode=trip_mode,
        trip_purpose=trip_purpose,
        trip_depart=trip_depart,
        trip_period=trip_period,
        trip_rate_scale=sigma,
    )


@dataclass(frozen=True)
class CellSelector:
    """Which trips and O-D cells a simulation tracks.

    ``cells`` lists (origin, destination) unit labels; ``None`` tracks every
    cell with a positive true total. ``closest_to`` instead picks the single
    cell whose true total is nearest that value.
    """

    period: str | None = None
    mode: str | None = None
    purpose: str | None = None
    level: str = "region"
    cells: tuple[tuple[str, str], ...] | None = None
    closest_to: float | None = None

    def __post_init__(self):
        if self.level not in ("region", "zone"):
            raise ConfigError("level must be 'region' or 'zone'")
        for dim, cats in (("period", PERIODS), ("mode", MODES), ("purpose", PURPOSES)):
            v = getattr(self, dim)
            if v is not None and v not in cats:
                raise ConfigError(f"unknown {dim} {v!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cells"] = None if self.cells is None else [list(c) for c in self.cells]
        return d


@dataclass
class CellTarget:
    labels: list[tuple[str, str]]
    true_totals: np.ndarray
    unit_cv: np.ndarray
    trip_household: np.ndarray
    trip_cell: np.ndarray
    trip_weight: np.ndarray


def resolve_cells(pop: SynthPopulation, selector: CellSelector) -> CellTarget:
    keep = np.ones(pop.n_trips, dtype=bool)
    if selector.period is not None:
        keep &= pop.trip_period == PERIODS.index(selector.period)
    if selector.mode is not None:
        keep &= pop.trip_mode == MODES.index(selector.mode)
    if selector.purpose is not None:
        keep &= pop.trip_purpose == PURPOSES.index(selector.purpose)
    if selector.level == "region":
        units = pop.zone_region
        names = pop.region_names
    else:
        units = np.arange(pop.config.n_zones)
        names = [pop.zone_label(z) for z in range(pop.config.n_zones)]
    U = len(names)
    o = units[pop.trip_origin[keep]]
    d = units[pop.trip_destination[keep]]
    flat = o * U + d
    totals = np.bincount(flat, minlength=U * U).astype(float)

    if selector.closest_to is not None:
        positive = np.flatnonzero(totals > 0)
        if positive.size == 0:
            raise ConfigError("selected slice has no trips")
        chosen = [int(positive[np.argmin(np.abs(totals[positive] - selector.closest_to))])]
    elif selector.cells is not None:
        idx = {n: i for i, n in enumerate(names)}
        try:
            chosen = [idx[a] * U + idx[b] for a, b in selector.cells]
        except KeyError as exc:
            raise ConfigError(f"unknown cell label {exc.args[0]!r}") from None
    else:
        chosen = [int(k) for k in np.flatnonzero(totals > 0)]
    if not chosen:
        raise ConfigError("no cells selected")

    remap = np.full(U * U, -1, dtype=np.int64)
    remap[chosen] = np.arange(len(chosen))
    cell = remap[flat]
    in_cells = cell >= 0
    hh = pop.trip_household[keep][in_cells].astype(np.int64)
    cell = cell[in_cells]

    # unit-level dispersion implied by clustering of a cell's trips within
    # households; exactly 1 when no household contributes two trips
    per_hh = np.zeros(len(chosen))
    per_hh_sq = np.zeros(len(chosen))
    pair = cell * pop.n_households + hh
    uniq, cnt = np.unique(pair, return_counts=True)
    np.add.at(per_hh, uniq // pop.n_households, cnt)
    np.add.at(per_hh_sq, uniq // pop.n_households, cnt.astype(float) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit_cv = np.sqrt(per_hh_sq / per_hh)

    labels = [(names[k // U], names[k % U]) for k in chosen]
    return CellTarget(labels, totals[chosen], unit_cv, hh, cell,
                      np.ones(len(cell), dtype=np.float64))


@dataclass
class CellResult:
    origin: str
    destination: str
    true_total: float
    unit_cv: float
    mean_estimate: float
    std_estimate: float
    empirical_coverage: float
    mape: float


@dataclass
class SimulationResult:
    seed: int
    rate: float
    replications: int
    n_sampled: int
    margin_of_error: float
    confidence: float
    selector: CellSelector
    cells: list[CellResult]
    coverage: float
    mape: float
    warnings: list[str] = field(default_factory=list)
    population: dict | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "seed": self.seed,
            "rate": self.rate,
            "replications": self.replications,
            "n_sampled": self.n_sampled,
            "spec": {"confidence": self.confidence, "margin_of_error": self.margin_of_error},
            "selector": self.selector.to_dict(),
            "population": self.population,
            "coverage": self.coverage,
            "mape": self.mape,
            "cells": [asdict(c) for c in self.cells],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        fields = list(CellResult.__dataclass_fields__)
        w.writerow(fields)
        for c in self.cells:
            w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(c).values()])
        return buf.getvalue()


def replication_rng(seed: int, stream: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, replication)))


def _run_replications(target: CellTarget, n_units: int, n_sampled: int, expansion: float,
                      seed: int, stream: int, reps: range, out: np.ndarray) -> None:
    K = len(target.labels)
    for r in reps:
        rng = replication_rng(seed, stream, r)
        chosen = rng.choice(n_units, size=n_sampled, replace=False).astype(np.int64)
        mask = kernels.sample_mask(chosen, n_units)
        out[r] = kernels.tabulate_sampled(mask, target.trip_household, target.trip_cell,
                                          target.trip_weight, K, expansion)


def simulate_sampling(
    population: SynthPopulation,
    rate: float,
    replications: int,
    spec: SizeSpec,
    selector: CellSelector = CellSelector(),
    *,
    seed: int | None = None,
    stream: int = 0,
    workers: int = 1,
    target: CellTarget | None = None,
) -> SimulationResult:
    """Repeated simple random household samples at ``rate``.

    A replication's estimate for a cell is the sampled households' trips in
    that cell times ``N / n``; it counts as covered when its relative error is
    within the margin of error.
    """
    if not (0.0 < rate <= 1.0):
        raise ConfigError(f"rate must lie in (0, 1], got {rate!r}")
    if replications < 1:
        raise ConfigError("replications must be >= 1")
    seed = population.config.seed if seed is None else seed
    N = population.n_households
    warnings = []
    n = int(round(rate * N))
    if n < 1:
        n = 1
        warnings.append(f"rate {rate} samples fewer than one household; drawing 1")
    expansion = N / n
    if target is None:
        target = resolve_cells(population, selector)
    K = len(target.labels)
    thin = int(np.sum(target.true_totals * (n / N) < 1))
    if thin:
        msg = f"{thin} cell(s) expect fewer than one sampled trip at rate {rate}"
        warnings.append(msg)
        log.warning(msg)

    est = np.empty((replications, K))
    workers = max(1, int(workers))
    if workers == 1:
        _run_replications(target, N, n, expansion, seed, stream, range(replications), est)
    else:
        chunks = [range(i, replications, workers) for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda rr: _run_replications(target, N, n, expansion, seed, stream, rr, est),
                          chunks))

    truth = target.true_totals
    rel = (est - truth) / truth
    covered = np.abs(rel) <= spec.margin_of_error * (1 + 1e-12)
    cells = [
        CellResult(
            origin=o, destination=d,
            true_total=float(truth[k]),
            unit_cv=float(target.unit_cv[k]),
            mean_estimate=float(est[:, k].mean()),
            std_estimate=float(est[:, k].std(ddof=1)) if replications > 1 else 0.0,
            empirical_coverage=float(covered[:, k].mean()),
            mape=float(np.abs(rel[:, k]).mean() * 100.0),
        )
        for k, (o, d) in enumerate(target.labels)
    ]
    return SimulationResult(
        seed=seed, rate=rate, replications=replications, n_sampled=n,
        margin_of_error=spec.margin_of_error, confidence=spec.confidence,
        selector=selector, cells=cells,
        coverage=float(covered.mean()),
        mape=float(np.abs(rel).mean() * 100.0),
        warnings=warnings,
        population={"n_households": N, "n_trips": population.n_trips,
                    "realized_cv": population.realized_cv(),
                    "config": population.config.to_dict()},
    )


@dataclass
class CurvePoint:
    rate: float
    coverage: float
    mape: float
    n_sampled: int


def coverage_curve(
    population: SynthPopulation,
    spec: SizeSpec,
    rates: Sequence[float],
    *,
    replications: int = 200,
    selector: CellSelector = CellSelector(),
    seed: int | None = None,
    workers: int = 1,
) -> list[CurvePoint]:
    """Empirical coverage and MAPE at each sampling rate (stream = rate index)."""
    target = resolve_cells(population, selector)
    out = []
    for i, rate in enumerate(rates):
        res = simulate_sampling(population, rate, replications, spec, selector,
                                seed=seed, stream=i, workers=workers, target=target)
        out.append(CurvePoint(rate, res.coverage, res.mape, res.n_sampled))
    return out


def curve_json(points: Sequence[CurvePoint], **extra) -> str:
    return json.dumps({**extra, "points": [asdict(p) for p in points]}, indent=2)


# --- named configurations used by the bundled fixtures and the CLI ---------

# skewed splits put the CV of period x mode x purpose trip totals near 2
HETEROGENEOUS_MODAL_SPLIT = {"auto": 0.80, "transit": 0.12, "active": 0.06, "other": 0.02}
HETEROGENEOUS_PURPOSE_SPLIT = {"work": 0.20, "home": 0.50, "school": 0.05, "recreation": 0.20, "other": 0.05}
SMALL_CITY = SynthConfig(n_households=200_000, n_zones=40, heterogeneity=0.7, seed=1255,
                         modal_split=HETEROGENEOUS_MODAL_SPLIT,
                         purpose_split=HETEROGENEOUS_PURPOSE_SPLIT, peak_share=0.35)
SMALL_CITY_SURVEY_SIZE = 8000
BIG_CITY = SynthConfig(n_households=8000, n_zones=60, heterogeneity=0.95, seed=5344,
                       attribute_loading=0.75)
BIG_CITY_POPULATION = 1_000_000


def sample_survey(
    population: SynthPopulation, n_households: int, seed: int, *, stratified: bool = False
) -> SynthPopulation:
    """Random sample of households, weighted to expand to the population.

    ``stratified=True`` allocates the sample proportionally over household
    size x vehicle classes (largest remainders) and draws each stratum at
    random; otherwise the sample is simple random.
    """
    N = population.n_households
    if not 1 <= n_households <= N:
        raise ConfigError("survey size must lie between 1 and the population size")
    rng = np.random.default_rng(seed)
    if not stratified:
        chosen = rng.choice(N, size=n_households, replace=False)
        return population.subset(chosen, N / n_households)
    codes = population.stratum_codes()
    strata, counts = np.unique(codes, return_counts=True)
    quota = counts * n_households / N
    take = np.floor(quota).astype(np.int64)
    short = n_households - int(take.sum())
    order = np.lexsort((strata, -(quota - take)))
    take[order[:short]] += 1
    chosen = np.concatenate([
        rng.choice(np.flatnonzero(codes == s), size=int(k), replace=False)
        for s, k in zip(strata, take)
    ])
    return population.subset(chosen, N / n_households)


def survey_fixture(config: SynthConfig, household_population: int) -> SynthPopulation:
    """A synthetic survey generated directly, weighted to ``household_population``."""
    pop = synth_population(config)
    pop.hh_weight = household_population / config.n_households
    return pop


def small_city_survey() -> tuple[SynthPopulation, SynthPopulation]:
    """The small-city population and the survey bundled as the package fixture."""
    pop = synth_population(SMALL_CITY)
    return pop, sample_survey(pop, SMALL_CITY_SURVEY_SIZE, SMALL_CITY.seed + 1)


# proportional stratified 5% draw used to demonstrate the marginal audit
AUDIT_RATE = 0.05
AUDIT_SEED = SMALL_CITY.seed + 2


def audit_sample(
    population: SynthPopulation,
    rate: float = AUDIT_RATE,
    seed: int = AUDIT_SEED,
    *,
    stratified: bool = True,
) -> SynthPopulation:
    if not 0.0 < rate <= 1.0:
        raise ConfigError(f"audit rate must lie in (0, 1], got {rate!r}")
    n = max(1, round(rate * population.n_households))
    return sample_survey(population, n, seed, stratified=stratified)


# household population whose peak work trips R0->R5 form a ~1,100-trip cell
# with nearly unclustered trips (unit CV ~1.01) and trip-rate CV ~1
COVERAGE_CONFIG = SynthConfig(n_households=100_000, n_zones=60, heterogeneity=1.0, seed=1979)
COVERAGE_SELECTOR = CellSelector(period="peak", purpose="work", cells=(("R0", "R5"),))

# peak auto commuting between four regions
COMMUTER_CONFIG = SynthConfig(n_households=200_000, n_zones=40, n_regions=4, gravity_beta=1.5,
                              heterogeneity=1.0, seed=1)
COMMUTER_SELECTOR = CellSelector(period="peak", mode="auto", purpose="work")

PRESETS = {
    "fixture": SMALL_CITY,
    "small-city": SMALL_CITY,
    "big-city": BIG_CITY,
    "coverage": COVERAGE_CONFIG,
    "commuter": COMMUTER_CONFIG,
}
PRESET_SELECTORS = {"coverage": COVERAGE_SELECTOR, "commuter": COMMUTER_SELECTOR}

