"""Core-augment survey planning.

Every region gets a uniform core sample (default 4% of households). Each
region's augment targets are then sized with the stratified heuristic in
:mod:`travelsample.smith`.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import ConfigError, DataError
from .records import HouseholdRecord, TripRecord
from .smith import AugmentPlan, StratificationScheme, smith_plan
from .stats import SizeSpec

log = logging.getLogger(__name__)

OVERLAP_POLICIES = ("additive", "credit-core")
DEFAULT_CORE_RATE = 0.04
CORE_METHOD = "stratified random sampling"


def _households_using(mode: str) -> Callable[[Sequence[HouseholdRecord], Sequence[TripRecord]], set[str]]:
    def select(households, trips):
        return {t.household_id for t in trips if t.mode == mode}
    return select


# cohort name -> selector returning the household ids in the cohort
COHORTS: dict[str, Callable[[Sequence[HouseholdRecord], Sequence[TripRecord]], set[str]]] = {
    "all": lambda hh, trips: {h.household_id for h in hh},
    "transit_users": _households_using("transit"),
    "active_users": _households_using("active"),
    "no_car": lambda hh, trips: {h.household_id for h in hh if h.vehicles == 0},
}


@dataclass(frozen=True)
class AugmentTarget:
    name: str
    cohort: str = "all"
    scheme: str = "size,income,vehicles"

    def __post_init__(self):
        if self.cohort not in COHORTS:
            raise ConfigError(f"unknown cohort {self.cohort!r}; known: {sorted(COHORTS)}")


@dataclass
class RegionProfile:
    name: str
    household_population: int
    households: Sequence[HouseholdRecord] = ()
    trips: Sequence[TripRecord] = ()
    augment_targets: Sequence[AugmentTarget] = ()

    def __post_init__(self):
        if self.household_population < 1:
            raise ConfigError(f"region {self.name}: household_population must be >= 1")


def plan_core(regions: Sequence[RegionProfile], core_rate: float = DEFAULT_CORE_RATE) -> dict[str, int]:
    """Core sample per region: ``ceil(core_rate * population)``."""
    if not (0.0 < core_rate < 1.0):
        raise ConfigError(f"core_rate must lie in (0, 1), got {core_rate!r}")
    # round() strips float noise such as 0.04 * 25 = 1.0000000000000002
    return {r.name: math.ceil(round(core_rate * r.household_population, 9)) for r in regions}


@dataclass
class TargetPlan:
    target: AugmentTarget
    plan: AugmentPlan
    cohort_households: int
    cohort_share: float

    def to_dict(self) -> dict:
        return {
            "target": self.target.name,
            "cohort": self.target.cohort,
            "cohort_households": self.cohort_households,
            "cohort_share": self.cohort_share,
            "plan": self.plan.to_dict(),
        }


def plan_augment(
    region: RegionProfile,
    spec: SizeSpec,
    *,
    cv_denominator: str = "overall",
    warnings: list[str] | None = None,
) -> list[TargetPlan]:
    """One stratified plan per augment target, in target order.

    Targets whose cohort is empty in the region's microdata are skipped.
    """
    out = []
    hh = list(region.households)
    total_weight = math.fsum(h.weight for h in hh)
    for target in region.augment_targets:
        ids = COHORTS[target.cohort](hh, region.trips)
        cohort = [h for h in hh if h.household_id in ids]
        if not cohort:
            msg = f"region {region.name}: cohort {target.cohort!r} empty; target {target.name!r} skipped"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            continue
        plan = smith_plan(
            cohort,
            StratificationScheme.parse(target.scheme),
            spec,
            population=region.household_population,
            cv_denominator=cv_denominator,
        )
        share = math.fsum(h.weight for h in cohort) / total_weight
        out.append(TargetPlan(target, plan, len(cohort), share))
    return out


@dataclass
class RegionPlan:
    name: str
    household_population: int
    core_size: int
    augments: list[TargetPlan]
    augment_contributions: list[int]
    total: int

    @property
    def effective_rate(self) -> float:
        return self.total / self.household_population

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "household_population": self.household_population,
            "core_size": self.core_size,
            "augments": [
                dict(a.to_dict(), contribution=c)
                for a, c in zip(self.augments, self.augment_contributions)
            ],
            "total": self.total,
            "effective_rate": self.effective_rate,
        }


@dataclass
class CoreAugmentPlan:
    core_rate: float
    overlap_policy: str
    regions: list[RegionPlan]
    spec: SizeSpec | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def study_population(self) -> int:
        return sum(r.household_population for r in self.regions)

    @property
    def study_total(self) -> int:
        return sum(r.total for r in self.regions)

    def to_dict(self) -> dict:
        return {
            "core_rate": self.core_rate,
            "core_method": CORE_METHOD,
            "overlap_policy": self.overlap_policy,
            "spec": self.spec.to_dict() if self.spec else None,
            "regions": [r.to_dict() for r in self.regions],
            "study_area": {
                "household_population": self.study_population,
                "core_total": sum(r.core_size for r in self.regions),
                "total": self.study_total,
                "effective_rate": self.study_total / self.study_population if self.regions else None,
            },
            "weighting_note": "core expansion weights and choice-based augment weights are not fused",
            "warnings": list(self.warnings),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["region", "household_population", "core_size", "augment_total", "total", "effective_rate"])
        for r in self.regions:
            w.writerow([r.name, r.household_population, r.core_size, sum(r.augment_contributions),
                        r.total, repr(r.effective_rate)])
        w.writerow(["STUDY AREA", self.study_population, sum(r.core_size for r in self.regions),
                    sum(sum(r.augment_contributions) for r in self.regions), self.study_total,
                    repr(self.study_total / self.study_population) if self.regions else ""])
        return buf.getvalue()


def combine_plan(
    core: Mapping[str, int],
    augments: Mapping[str, Sequence[TargetPlan]],
    regions: Sequence[RegionProfile],
    *,
    overlap_policy: str = "additive",
    core_rate: float = DEFAULT_CORE_RATE,
    spec: SizeSpec | None = None,
) -> CoreAugmentPlan:
    """Add augment sample sizes to the core per region.

    ``additive`` draws augments on top of the core. ``credit-core`` subtracts
    the core's expected coverage of the cohort (core size times cohort share),
    never going below zero.
    """
    if overlap_policy not in OVERLAP_POLICIES:
        raise ConfigError(f"unknown overlap policy {overlap_policy!r}; choose from {OVERLAP_POLICIES}")
    if set(core) != {r.name for r in regions}:
        raise DataError("core plan and region list cover different regions")
    out = []
    for r in regions:
        tps = list(augments.get(r.name, ()))
        contributions = []
        for tp in tps:
            need = tp.plan.final_total_rounded
            if overlap_policy == "credit-core":
                covered = core[r.name] * tp.cohort_share
                need = max(0, math.ceil(round(need - covered, 9)))
            contributions.append(need)
        total = core[r.name] + sum(contributions)
        out.append(RegionPlan(r.name, r.household_population, core[r.name], tps, contributions, total))
    return CoreAugmentPlan(core_rate, overlap_policy, out, spec)


def plan_study_area(
    regions: Sequence[RegionProfile],
    spec: SizeSpec,
    *,
    core_rate: float = DEFAULT_CORE_RATE,
    overlap_policy: str = "additive",
    cv_denominator: str = "overall",
) -> CoreAugmentPlan:
    core = plan_core(regions, core_rate)
    warnings: list[str] = []
    augments = {r.name: plan_augment(r, spec, cv_denominator=cv_denominator, warnings=warnings)
                for r in regions}
    plan = combine_plan(core, augments, regions, overlap_policy=overlap_policy,
                        core_rate=core_rate, spec=spec)
    plan.warnings = warnings
    return plan


def plan_json(plan: CoreAugmentPlan) -> str:
    return json.dumps(plan.to_dict(), indent=2, sort_keys=False)
