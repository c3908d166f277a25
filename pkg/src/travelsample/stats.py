"""Statistical primitives for interchange sample sizing.

Required sample sizes follow ``n0 = (cv * z / e) ** 2`` with the finite
population correction ``n = n0 / (1 + n0 / N)``; dividing by ``N`` gives the
sampling rate an origin-destination interchange of ``N`` trips needs.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .errors import DegenerateInputError, DomainError

__all__ = [
    "SizeSpec",
    "RateCurvePoint",
    "z_quantile",
    "coefficient_of_variation",
    "base_sample_size",
    "fpc_sample_size",
    "interchange_rate",
    "rate_curve",
    "curve_to_csv",
    "curve_to_json",
    "CURVE_HEADER",
]

# Acklam's rational approximation to the inverse normal CDF.
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549671010243209e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


def _norm_ppf(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (
            (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5])
            * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    # one Halley step against erfc brings the 1.15e-9 relative error to ~1e-15
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def z_quantile(confidence: float) -> float:
    """Two-sided standard-normal critical value for ``confidence``.

    >>> round(z_quantile(0.95), 4)
    1.96
    """
    if not (0.0 < confidence < 1.0) or math.isnan(confidence):
        raise DomainError(f"confidence must lie in (0, 1), got {confidence!r}")
    return _norm_ppf((1.0 + confidence) / 2.0)


@dataclass(frozen=True)
class SizeSpec:
    """Confidence level and relative margin of error for a size calculation."""

    confidence: float
    margin_of_error: float
    z: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 < self.margin_of_error < 1.0):
            raise DomainError(
                f"margin_of_error must lie in (0, 1), got {self.margin_of_error!r}"
            )
        object.__setattr__(self, "z", z_quantile(self.confidence))

    def to_dict(self) -> dict:
        return {"confidence": self.confidence, "margin_of_error": self.margin_of_error, "z": self.z}


def coefficient_of_variation(values: Iterable[float], ddof: int = 0) -> float:
    """Standard deviation over mean.

    ``ddof=0`` (the default) uses the population standard deviation, treating
    ``values`` as the complete distribution.
    """
    xs = [float(v) for v in values]
    if len(xs) < 2:
        raise DegenerateInputError(f"need at least 2 values for a CV, got {len(xs)}")
    if any(v < 0 for v in xs):
        raise DomainError("coefficient_of_variation expects nonnegative values")
    mean = math.fsum(xs) / len(xs)
    if mean <= 0:
        raise DegenerateInputError("mean is zero; CV undefined")
    ss = math.fsum((v - mean) ** 2 for v in xs)
    return math.sqrt(ss / (len(xs) - ddof)) / mean


def base_sample_size(cv: float, spec: SizeSpec) -> float:
    """Infinite-population sample size ``(cv * z / e) ** 2``, unrounded."""
    if cv < 0:
        raise DomainError(f"cv must be nonnegative, got {cv!r}")
    return (cv * spec.z / spec.margin_of_error) ** 2


def fpc_sample_size(n0: float, population: float) -> float:
    """Apply the finite population correction ``n0 / (1 + n0 / N)``."""
    if population < 1:
        raise DomainError(f"population must be >= 1, got {population!r}")
    if n0 < 0:
        raise DomainError(f"n0 must be nonnegative, got {n0!r}")
    if math.isinf(n0):
        return float(population)
    return n0 / (1.0 + n0 / population)


def interchange_rate(trip_total: float, cv: float, spec: SizeSpec) -> float:
    """Sampling rate required to estimate an interchange of ``trip_total`` trips."""
    n = fpc_sample_size(base_sample_size(cv, spec), trip_total)
    return n / trip_total


@dataclass(frozen=True)
class RateCurvePoint:
    trip_total: int
    cv: float
    confidence: float
    margin_of_error: float
    required_rate: float

    def to_dict(self) -> dict:
        return asdict(self)


CURVE_HEADER = ("confidence", "cv", "margin_of_error", "trip_total", "required_rate")


def rate_curve(
    trip_totals: Sequence[int],
    cvs: Sequence[float],
    confidences: Sequence[float],
    margin_of_error: float,
) -> list[RateCurvePoint]:
    """Cross-product table of required rates, sorted by (confidence, cv, trip_total)."""
    specs = {c: SizeSpec(c, margin_of_error) for c in confidences}
    points = [
        RateCurvePoint(int(n), float(cv), float(c), float(margin_of_error),
                       interchange_rate(n, cv, specs[c]))
        for c, cv, n in itertools.product(confidences, cvs, trip_totals)
    ]
    points.sort(key=lambda p: (p.confidence, p.cv, p.trip_total))
    return points


def curve_to_csv(points: Sequence[RateCurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for p in points:
        writer.writerow([repr(p.confidence), repr(p.cv), repr(p.margin_of_error),
                         p.trip_total, repr(p.required_rate)])
    return buf.getvalue()


def curve_to_json(points: Sequence[RateCurvePoint]) -> str:
    return json.dumps([p.to_dict() for p in points], indent=2)
