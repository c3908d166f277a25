"""Percent-RMSE audit of a survey sample against reference marginals.

Squared relative errors are averaged over the categories of each variable,
those means are averaged over variables, and the root is reported in percent.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .errors import SchemaError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarginalTable:
    variable: str
    categories: tuple[tuple[str, float], ...]

    def __post_init__(self):
        labels = [c for c, _ in self.categories]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"{self.variable}: duplicate category labels")
        for label, value in self.categories:
            if value < 0 or math.isnan(value):
                raise ValidationError(f"{self.variable}/{label}: value must be nonnegative")

    @classmethod
    def from_mapping(cls, variable: str, values: Mapping[str, float]) -> "MarginalTable":
        return cls(variable, tuple((str(k), float(v)) for k, v in values.items()))

    def as_dict(self) -> dict[str, float]:
        return dict(self.categories)


@dataclass(frozen=True)
class CategoryError:
    variable: str
    category: str
    reference: float
    sample: float
    relative_error: float | None
    status: str = "ok"  # ok | uncoverable | empty


def relative_errors(reference: MarginalTable, sample: MarginalTable) -> list[CategoryError]:
    """Signed ``(r - s) / r`` per category.

    Zero-reference categories carry ``relative_error=None`` and status
    ``uncoverable`` (sample > 0) or ``empty`` (both zero).
    """
    if reference.variable != sample.variable:
        raise SchemaError(f"variable mismatch: {reference.variable!r} vs {sample.variable!r}")
    r, s = reference.as_dict(), sample.as_dict()
    if set(r) != set(s):
        only_r = sorted(set(r) - set(s))
        only_s = sorted(set(s) - set(r))
        raise SchemaError(
            f"{reference.variable}: category sets differ; reference only {only_r}, sample only {only_s}"
        )
    out = []
    for label, rv in reference.categories:
        sv = s[label]
        if rv > 0:
            out.append(CategoryError(reference.variable, label, rv, sv, (rv - sv) / rv))
        else:
            status = "uncoverable" if sv > 0 else "empty"
            out.append(CategoryError(reference.variable, label, rv, sv, None, status))
    return out


def _variable_msq(errors: Sequence[CategoryError]) -> float | None:
    included = [e.relative_error for e in errors if e.relative_error is not None]
    if not included:
        return None
    return math.fsum(x * x for x in included) / len(included)


def _pair(references, samples):
    refs = {m.variable: m for m in references}
    samps = {m.variable: m for m in samples}
    if len(refs) != len(references) or len(samps) != len(samples):
        raise SchemaError("duplicate variable in marginal list")
    if set(refs) != set(samps):
        raise SchemaError(
            f"variable sets differ: reference only {sorted(set(refs) - set(samps))}, "
            f"sample only {sorted(set(samps) - set(refs))}"
        )
    return [(refs[v], samps[v]) for v in sorted(refs)]


def percent_rmse(
    references: Sequence[MarginalTable],
    samples: Sequence[MarginalTable],
    *,
    pooled: bool = False,
) -> float:
    """Percent RMSE over paired variables.

    With ``pooled=True`` all included categories are averaged together instead
    of per variable first.
    """
    return build_report(references, samples, pooled=pooled).overall_percent_rmse


@dataclass
class RepresentativenessReport:
    per_category: list[CategoryError]
    per_variable_rmse: dict[str, float]
    overall_percent_rmse: float
    pooled: bool = False
    excluded_categories: int = 0
    skipped_variables: list[str] = field(default_factory=list)
    weighting: str = "unweighted"
    geography: str | None = None

    def to_dict(self) -> dict:
        return {
            "geography": self.geography,
            "weighting": self.weighting,
            "pooled": self.pooled,
            "overall_percent_rmse": self.overall_percent_rmse,
            "per_variable_rmse": dict(self.per_variable_rmse),
            "per_category": [
                {
                    "variable": e.variable,
                    "category": e.category,
                    "reference": e.reference,
                    "sample": e.sample,
                    "relative_error": e.relative_error,
                    "status": e.status,
                }
                for e in self.per_category
            ],
            "excluded_categories": self.excluded_categories,
            "skipped_variables": list(self.skipped_variables),
        }


def build_report(
    references: Sequence[MarginalTable],
    samples: Sequence[MarginalTable],
    *,
    pooled: bool = False,
) -> RepresentativenessReport:
    per_category: list[CategoryError] = []
    per_var: dict[str, float] = {}
    msqs = []
    for ref, smp in _pair(references, samples):
        errs = relative_errors(ref, smp)
        per_category.extend(errs)
        msq = _variable_msq(errs)
        if msq is None:
            log.warning("variable %s has no category with a positive reference", ref.variable)
            continue
        per_var[ref.variable] = math.sqrt(msq) * 100.0
        msqs.append(msq)
    if pooled:
        included = [e.relative_error for e in per_category if e.relative_error is not None]
        overall = math.sqrt(math.fsum(x * x for x in included) / len(included)) * 100 if included else 0.0
    else:
        overall = math.sqrt(math.fsum(msqs) / len(msqs)) * 100.0 if msqs else 0.0
    excluded = sum(1 for e in per_category if e.relative_error is None)
    return RepresentativenessReport(per_category, per_var, overall, pooled, excluded)


def sample_marginals(
    rows: Iterable[Mapping[str, Any]],
    variables: Mapping[str, Sequence[str]],
    *,
    weight_field: str | None = "weight",
) -> tuple[list[MarginalTable], list[str], str]:
    """Tabulate (weighted) category counts from microdata rows.

    ``variables`` maps a variable (a row field) to its category labels. Returns
    the tables, the variables missing from the rows, and the weighting mode.
    """
    rows = list(rows)
    weighted = bool(rows) and weight_field is not None and all(weight_field in r for r in rows)
    totals: dict[str, dict[str, float]] = {v: defaultdict(float) for v in variables}
    present = {v for v in variables if rows and all(v in r for r in rows)}
    for r in rows:
        w = float(r[weight_field]) if weighted else 1.0
        for v in present:
            value = r[v]
            # multi-response fields count the row under each listed category
            if isinstance(value, (list, tuple, set, frozenset)):
                for item in value:
                    totals[v][str(item)] += w
            else:
                totals[v][str(value)] += w
    tables = []
    for v, cats in variables.items():
        if v not in present:
            continue
        tables.append(MarginalTable(v, tuple((c, totals[v].get(c, 0.0)) for c in cats)))
    missing = [v for v in variables if v not in present]
    return tables, missing, "weighted" if weighted else "unweighted"


def audit(
    microdata: Iterable[Mapping[str, Any]],
    reference: Sequence[MarginalTable],
    *,
    geography: str | None = None,
    geography_field: str = "region",
    weight_field: str | None = "weight",
    pooled: bool = False,
) -> RepresentativenessReport:
    """Compare microdata marginals with reference marginals.

    Reference variables absent from the microdata are skipped with a warning.
    """
    rows = list(microdata)
    if geography is not None:
        rows = [r for r in rows if str(r.get(geography_field)) == geography]
        if not rows:
            raise ValidationError(f"no microdata rows for geography {geography!r}")
    variables = {m.variable: [c for c, _ in m.categories] for m in reference}
    samples, missing, mode = sample_marginals(rows, variables, weight_field=weight_field)
    for v in missing:
        log.warning("variable %s missing from microdata; skipped", v)
    refs = [m for m in reference if m.variable not in missing]
    report = build_report(refs, samples, pooled=pooled)
    report.skipped_variables = missing
    report.weighting = mode
    report.geography = geography
    return report


def read_marginals_csv(
    path_or_text: str, *, is_text: bool = False, geography: str | None = None
) -> list[MarginalTable]:
    """Parse ``variable,category,value`` rows into marginal tables (file order kept).

    An optional ``geography`` column holds several areas in one file; rows with
    an empty geography describe the whole study area. ``geography`` selects
    which area to return.
    """
    if is_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) < {"variable", "category", "value"}:
            raise SchemaError("marginals CSV needs header variable,category,value")
        has_geo = "geography" in reader.fieldnames
        if geography is not None and not has_geo:
            raise SchemaError(f"marginals CSV has no geography column; cannot select {geography!r}")
        wanted = geography or ""
        order: dict[str, list[tuple[str, float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if has_geo and (row["geography"] or "") != wanted:
                continue
            try:
                value = float(row["value"])
            except ValueError:
                raise ValidationError(f"line {lineno}: bad value {row['value']!r}") from None
            order.setdefault(row["variable"], []).append((row["category"], value))
    if not order:
        raise SchemaError(f"no marginals for geography {wanted!r}" if has_geo else "marginals CSV is empty")
    return [MarginalTable(v, tuple(c)) for v, c in order.items()]


def write_marginals_csv(
    tables: Sequence[MarginalTable] | Mapping[str, Sequence[MarginalTable]],
) -> str:
    """Inverse of :func:`read_marginals_csv`.

    A mapping of geography to tables adds the ``geography`` column (use ``""``
    for the study area).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(tables, Mapping):
        w.writerow(["geography", "variable", "category", "value"])
        for geo, tabs in tables.items():
            for t in tabs:
                for c, v in t.categories:
                    w.writerow([geo, t.variable, c, repr(float(v))])
        return buf.getvalue()
    w.writerow(["variable", "category", "value"])
    for t in tables:
        for c, v in t.categories:
            w.writerow([t.variable, c, repr(float(v))])
    return buf.getvalue()


def report_json(reports: Sequence[RepresentativenessReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
