"""Smith's stratified heuristic for augment-sample sizes.

Households are grouped into strata by categorical attributes. Each stratum's
trip-rate spread is expressed as a CV against the overall mean trip rate and
weighted by the stratum's frequency; the sum of those weighted CVs (``c_star``)
drives the initial size ``F = c_star**2 * z**2 / e**2``. The stratum with the
largest CV is the critical one: inflating the proportional allocation until
that stratum receives its optimal share gives the full random sample.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    ConsistencyError,
    DegenerateInputError,
    DegeneratePopulationError,
    ValidationError,
)
from .records import HouseholdRecord
from .stats import SizeSpec

log = logging.getLogger(__name__)

CV_DENOMINATORS = ("overall", "stratum")
SELF_CHECK_RTOL = 1e-6

Key = tuple


def _ceil(x: float) -> int:
    # absorb float noise such as 1536.0000000000002
    return math.ceil(round(x, 9))


@dataclass(frozen=True)
class Variable:
    """One stratification variable.

    Numeric variables carry ``edges``: classes are ``[edges[i], edges[i+1])``
    with the last class closed on the right. Categorical variables carry an
    optional ``categories`` map from raw token to class label; with neither,
    each distinct raw token is its own class.
    """

    name: str
    attribute: str
    edges: tuple[float, ...] | None = None
    labels: tuple[str, ...] | None = None
    categories: Mapping[str, str] | None = None
    tertiles: bool = False

    def classify(self, value: Any) -> str:
        if self.edges is not None:
            try:
                x = float(value)
            except (TypeError, ValueError):
                raise ValidationError(f"{self.name}: non-numeric value {value!r}") from None
            edges = self.edges
            labels = self.labels or _interval_labels(edges)
            if x < edges[0] or x > edges[-1]:
                raise ValidationError(
                    f"{self.name}: value {value!r} outside boundaries [{edges[0]}, {edges[-1]}]"
                )
            for i in range(len(edges) - 1):
                if x < edges[i + 1] or i == len(edges) - 2:
                    return labels[i]
        if self.categories is not None:
            token = str(value)
            if token not in self.categories:
                raise ValidationError(f"{self.name}: unknown category {value!r}")
            return self.categories[token]
        return str(value)

    def describe(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "attribute": self.attribute}
        if self.edges is not None:
            out["edges"] = [e if math.isfinite(e) else "inf" for e in self.edges]
            out["labels"] = list(self.labels or _interval_labels(self.edges))
        if self.categories is not None:
            out["categories"] = dict(self.categories)
        if self.tertiles:
            out["boundaries_from"] = "data tertiles"
        return out


def _interval_labels(edges: Sequence[float]) -> tuple[str, ...]:
    out = []
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        close = "]" if i == len(edges) - 2 else ")"
        out.append(f"[{lo:g},{hi:g}{close}")
    return tuple(out)


def _tertile_variable(name: str, attribute: str, values: Sequence[float]) -> Variable:
    arr = np.asarray(values, dtype=float)
    q1, q2 = np.quantile(arr, [1 / 3, 2 / 3])
    lo, hi = float(arr.min()), float(arr.max())
    edges = (lo, float(q1), float(q2), hi)
    return Variable(name, attribute, edges=edges, labels=("low", "mid", "high"), tertiles=True)


# named presets usable from "--scheme size,income,vehicles"
PRESETS: dict[str, Callable[[], Variable]] = {
    "size": lambda: Variable("size", "size", edges=(1, 2, 3, math.inf), labels=("1", "2", "3+")),
    "vehicles": lambda: Variable(
        "vehicles", "vehicles", edges=(0, 1, 2, math.inf), labels=("0", "1", "2+")
    ),
    "income": lambda: Variable("income", "income_class", tertiles=True),
    "region": lambda: Variable("region", "region"),
}


@dataclass(frozen=True)
class StratificationScheme:
    variables: tuple[Variable, ...]

    def __post_init__(self):
        if not self.variables:
            raise ConfigError("a stratification scheme needs at least one variable")

    @classmethod
    def parse(cls, text: str | Sequence[str]) -> "StratificationScheme":
        names = [s.strip() for s in text.split(",")] if isinstance(text, str) else list(text)
        variables = []
        for n in names:
            if n not in PRESETS:
                raise ConfigError(f"unknown stratification variable {n!r}; known: {sorted(PRESETS)}")
            variables.append(PRESETS[n]())
        return cls(tuple(variables))

    def resolve(self, households: Sequence[HouseholdRecord]) -> "StratificationScheme":
        """Fill in data-driven boundaries (income tertiles)."""
        resolved = []
        for v in self.variables:
            if v.tertiles and v.edges is None:
                raw = [getattr(h, v.attribute) for h in households]
                try:
                    values = [float(x) for x in raw]
                except ValueError:
                    # non-numeric income tokens: treat as categorical
                    resolved.append(Variable(v.name, v.attribute))
                    continue
                resolved.append(_tertile_variable(v.name, v.attribute, values))
            else:
                resolved.append(v)
        return StratificationScheme(tuple(resolved))

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def describe(self) -> list[dict]:
        return [v.describe() for v in self.variables]


@dataclass(frozen=True)
class StratumStats:
    key: Key
    count: int
    frequency: float
    mean_trip_rate: float
    std_trip_rate: float
    cv: float
    weighted_cv: float
    thin: bool = False


@dataclass(frozen=True)
class StratumTable:
    strata: tuple[StratumStats, ...]
    overall_mean_trip_rate: float
    c_star: float
    cv_denominator: str = "overall"

    @property
    def cv_max(self) -> float:
        return max(s.cv for s in self.strata)

    def by_key(self) -> dict[Key, StratumStats]:
        return {s.key: s for s in self.strata}


def compute_stats(
    groups: Mapping[Key, Sequence[float]],
    *,
    frequencies: Mapping[Key, float] | None = None,
    cv_denominator: str = "overall",
    ddof: int = 0,
) -> StratumTable:
    """Per-stratum trip-rate statistics and ``c_star``.

    ``groups`` maps a stratum key to the trip rates of its members. By default
    a stratum's frequency is its share of all members; ``frequencies`` overrides
    that (they must sum to 1). Empty groups are dropped.
    """
    if cv_denominator not in CV_DENOMINATORS:
        raise ConfigError(f"cv_denominator must be one of {CV_DENOMINATORS}")
    keys = sorted(k for k, v in groups.items() if len(v) > 0)
    if not keys:
        raise DegenerateInputError("no nonempty strata")
    codes = np.concatenate(
        [np.full(len(groups[k]), i, dtype=np.int64) for i, k in enumerate(keys)]
    )
    # sorted within each stratum so record order cannot change any float sum
    values = np.concatenate([np.sort(np.asarray(groups[k], dtype=np.float64)) for k in keys])
    if np.any(values < 0):
        raise ValidationError("trip rates must be nonnegative")
    counts, means, m2 = kernels.group_moments(codes, values, len(keys))
    total = int(counts.sum())
    overall = float(values.sum() / total)
    if overall <= 0:
        raise DegenerateInputError("overall mean trip rate is zero")

    if frequencies is None:
        freqs = [int(c) / total for c in counts]
    else:
        freqs = [float(frequencies.get(k, 0.0)) for k in keys]
        if abs(math.fsum(freqs) - 1.0) > 1e-9:
            raise ValidationError(f"stratum frequencies sum to {math.fsum(freqs)}, not 1")

    strata = []
    for i, k in enumerate(keys):
        n = int(counts[i])
        thin = n < 2
        std = 0.0 if thin else math.sqrt(m2[i] / (n - ddof))
        denom = overall if cv_denominator == "overall" else float(means[i])
        cv = std / denom if denom > 0 else 0.0
        strata.append(
            StratumStats(
                key=k,
                count=n,
                frequency=freqs[i],
                mean_trip_rate=float(means[i]),
                std_trip_rate=std,
                cv=cv,
                weighted_cv=freqs[i] * cv,
                thin=thin,
            )
        )
    c_star = math.fsum(s.weighted_cv for s in strata)
    return StratumTable(tuple(strata), overall, c_star, cv_denominator)


def group_households(
    households: Sequence[HouseholdRecord], scheme: StratificationScheme
) -> dict[Key, list[float]]:
    """Classify households into strata keyed by category tuples."""
    if not households:
        raise DegenerateInputError("no households to stratify")
    groups: dict[Key, list[float]] = {}
    for h in households:
        try:
            key = tuple(v.classify(getattr(h, v.attribute)) for v in scheme.variables)
        except ValidationError as exc:
            raise ValidationError(f"household {h.household_id}: {exc}") from None
        groups.setdefault(key, []).append(float(h.trip_count))
    return groups


def merge_thin_groups(groups: dict[Key, list[float]], min_count: int = 2) -> dict[Key, list[float]]:
    out: dict[Key, list[float]] = {}
    other: list[float] = []
    for k, v in groups.items():
        if len(v) < min_count:
            other.extend(v)
        else:
            out[k] = v
    if other:
        out[("other",)] = other
    return out


def stratify(
    households: Sequence[HouseholdRecord],
    scheme: StratificationScheme,
    *,
    cv_denominator: str = "overall",
    merge_thin: bool = False,
) -> StratumTable:
    scheme = scheme.resolve(households)
    groups = group_households(households, scheme)
    if merge_thin:
        groups = merge_thin_groups(groups)
    return compute_stats(groups, cv_denominator=cv_denominator)


def initial_sample_size(c_star: float, spec: SizeSpec) -> float:
    return c_star ** 2 * spec.z ** 2 / spec.margin_of_error ** 2


@dataclass(frozen=True)
class StratumAllocation:
    key: Key
    weight: float
    optimal_allocation: float
    expected_frequency: float
    final_required: float = math.nan

    @property
    def final_required_rounded(self) -> int:
        return _ceil(self.final_required)


def allocate(table: StratumTable, F: float) -> list[StratumAllocation]:
    """Optimal (CV-weighted) and proportional (frequency) allocations of ``F``."""
    if F < 0:
        raise ConfigError("initial sample size must be nonnegative")
    if table.c_star <= 0:
        raise DegeneratePopulationError(
            "no between/within dispersion; any sample suffices"
        )
    out = []
    for s in table.strata:
        w = s.weighted_cv / table.c_star
        out.append(StratumAllocation(s.key, w, w * F, s.frequency * F))
    return out


@dataclass
class AugmentPlan:
    table: StratumTable
    allocations: list[StratumAllocation]
    initial_size_F: float
    critical_stratum: Key
    inflation_rho: float
    final_total: float
    final_total_rounded: int
    population: float | None = None
    spec: SizeSpec | None = None
    scheme: StratificationScheme | None = None
    tied_critical: list[Key] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def sampling_rate(self) -> float | None:
        if not self.population:
            return None
        return self.final_total_rounded / self.population

    def rows(self) -> list[dict]:
        stats = self.table.by_key()
        out = []
        for a in self.allocations:
            s = stats[a.key]
            out.append(
                {
                    "key": list(a.key),
                    "count": s.count,
                    "frequency": s.frequency,
                    "mean": s.mean_trip_rate,
                    "std": s.std_trip_rate,
                    "cv": s.cv,
                    "weighted_cv": s.weighted_cv,
                    "weight": a.weight,
                    "optimal": a.optimal_allocation,
                    "expected": a.expected_frequency,
                    "final": a.final_required,
                    "final_rounded": a.final_required_rounded,
                    "thin": s.thin,
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict() if self.spec else None,
            "scheme": self.scheme.describe() if self.scheme else None,
            "cv_denominator": self.table.cv_denominator,
            "overall_mean_trip_rate": self.table.overall_mean_trip_rate,
            "strata": self.rows(),
            "c_star": self.table.c_star,
            "F": self.initial_size_F,
            "critical": list(self.critical_stratum),
            "tied_critical": [list(k) for k in self.tied_critical],
            "rho": self.inflation_rho,
            "final_total": self.final_total,
            "final_total_rounded": self.final_total_rounded,
            "population": self.population,
            "sampling_rate": self.sampling_rate,
            "warnings": list(self.warnings),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        fields = ["key", "count", "frequency", "mean", "std", "cv", "weighted_cv",
                  "weight", "optimal", "expected", "final", "final_rounded", "thin"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            r = dict(r, key="|".join(r["key"]))
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()


def critical_inflation(
    table: StratumTable,
    allocations: Sequence[StratumAllocation],
    *,
    spec: SizeSpec | None = None,
    population: float | None = None,
) -> AugmentPlan:
    """Inflate the proportional allocation until the critical stratum is covered."""
    by_key = table.by_key()
    cv_max = table.cv_max
    tied = sorted(s.key for s in table.strata if s.cv >= cv_max * (1 - 1e-12))
    critical = tied[0]
    warnings = []
    if len(tied) > 1:
        warnings.append(f"tied-critical: {len(tied)} strata share the largest CV {cv_max:.6g}")
        log.warning(warnings[-1])
    crit = next(a for a in allocations if a.key == critical)
    F = math.fsum(a.expected_frequency for a in allocations)
    if crit.expected_frequency > 0:
        rho = crit.optimal_allocation / crit.expected_frequency
    else:
        # F == 0; the ratio reduces to cv / c_star
        rho = by_key[critical].cv / table.c_star
    finals = [
        StratumAllocation(a.key, a.weight, a.optimal_allocation, a.expected_frequency,
                          a.expected_frequency * rho)
        for a in allocations
    ]
    final_total = F * rho
    for s in table.strata:
        if s.thin:
            warnings.append(f"thin stratum {'|'.join(s.key)} ({s.count} household)")
    return AugmentPlan(
        table=table,
        allocations=finals,
        initial_size_F=F,
        critical_stratum=critical,
        inflation_rho=rho,
        final_total=final_total,
        final_total_rounded=_ceil(final_total),
        population=population,
        spec=spec,
        tied_critical=tied if len(tied) > 1 else [],
        warnings=warnings,
    )


def closed_form_total(c_star: float, cv_max: float, spec: SizeSpec) -> float:
    return c_star * cv_max * spec.z ** 2 / spec.margin_of_error ** 2


def plan_from_table(
    table: StratumTable,
    spec: SizeSpec,
    *,
    population: float | None = None,
    scheme: StratificationScheme | None = None,
) -> AugmentPlan:
    """Run the allocation steps on a prepared table, with the closed-form self-check."""
    F = initial_sample_size(table.c_star, spec)
    allocations = allocate(table, F)
    plan = critical_inflation(table, allocations, spec=spec, population=population)
    plan.scheme = scheme
    expected = closed_form_total(table.c_star, table.cv_max, spec)
    if not math.isclose(plan.final_total, expected, rel_tol=SELF_CHECK_RTOL, abs_tol=1e-12):
        raise ConsistencyError(
            f"step-by-step total {plan.final_total!r} disagrees with closed form {expected!r}"
        )
    return plan


def smith_plan(
    households: Sequence[HouseholdRecord],
    scheme: StratificationScheme,
    spec: SizeSpec,
    *,
    population: float | None = None,
    cv_denominator: str = "overall",
    merge_thin: bool = False,
) -> AugmentPlan:
    """Full pipeline: stratify, compute statistics, allocate and inflate.

    ``population`` defaults to the sum of household expansion weights.
    """
    resolved = scheme.resolve(households)
    groups = group_households(households, resolved)
    if merge_thin:
        groups = merge_thin_groups(groups)
    table = compute_stats(groups, cv_denominator=cv_denominator)
    if population is None:
        population = math.fsum(h.weight for h in households)
    return plan_from_table(table, spec, population=population, scheme=resolved)
