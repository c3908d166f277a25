"""Survey microdata records and their closed category sets."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import ValidationError

MODES = ("auto", "transit", "active", "other")
PURPOSES = ("work", "home", "school", "recreation", "other")
PERIODS = ("peak", "offpeak")

# [start, end) in minutes after midnight
PEAK_WINDOWS = ((6 * 60, 10 * 60), (15 * 60, 19 * 60))


def period_from_hhmm(hhmm: int | str) -> str:
    """Classify a departure time such as ``930`` or ``"0930"`` as peak/offpeak."""
    value = int(hhmm)
    hh, mm = divmod(value, 100)
    if not (0 <= hh <= 23 and 0 <= mm <= 59):
        raise ValidationError(f"depart_hhmm out of range: {hhmm!r}")
    minutes = hh * 60 + mm
    for start, end in PEAK_WINDOWS:
        if start <= minutes < end:
            return "peak"
    return "offpeak"


@dataclass(frozen=True)
class HouseholdRecord:
    household_id: str
    region: str
    zone: str
    size: int
    income_class: str
    vehicles: int
    weight: float = 1.0
    trip_count: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError(f"household {self.household_id}: size must be >= 1")
        if self.vehicles < 0:
            raise ValidationError(f"household {self.household_id}: vehicles must be >= 0")
        if not self.weight > 0:
            raise ValidationError(f"household {self.household_id}: weight must be > 0")


@dataclass(frozen=True)
class TripRecord:
    household_id: str
    origin_zone: str
    destination_zone: str
    mode: str
    purpose: str
    period: str
    weight: float = 1.0
    depart_hhmm: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.purpose not in PURPOSES:
            raise ValidationError(f"unknown purpose {self.purpose!r}")
        if self.period not in PERIODS:
            raise ValidationError(f"unknown period {self.period!r}")
        if not self.weight > 0:
            raise ValidationError("trip weight must be > 0")


def attach_trip_counts(
    households: Sequence[HouseholdRecord], trips: Iterable[TripRecord]
) -> list[HouseholdRecord]:
    """Return copies of ``households`` with ``trip_count`` set from linked trips.

    Households without trips get a count of 0 and stay in the result.
    """
    counts: dict[str, int] = {h.household_id: 0 for h in households}
    for t in trips:
        if t.household_id in counts:
            counts[t.household_id] += 1
    return [replace(h, trip_count=counts[h.household_id]) for h in households]


def size_class(size: int) -> str:
    if size <= 3:
        return str(size)
    return "4-5" if size <= 5 else "6+"


def vehicle_class(vehicles: int) -> str:
    return "2+" if vehicles >= 2 else str(vehicles)


# household-level audit variables and their category labels; mode_users
# counts each household once under every mode it used
AUDIT_VARIABLES = {
    "household_size": ["1", "2", "3", "4-5", "6+"],
    "vehicles": ["0", "1", "2+"],
    "mode_users": list(MODES),
}


def household_audit_rows(
    households: Sequence[HouseholdRecord], trips: Iterable[TripRecord]
) -> list[dict]:
    """One row per household with the audit variables, weight and region."""
    used: dict[str, set[str]] = {h.household_id: set() for h in households}
    for t in trips:
        modes = used.get(t.household_id)
        if modes is not None:
            modes.add(t.mode)
    return [
        {
            "household_id": h.household_id,
            "region": h.region,
            "household_size": size_class(h.size),
            "vehicles": vehicle_class(h.vehicles),
            "mode_users": tuple(m for m in MODES if m in used[h.household_id]),
            "weight": h.weight,
        }
        for h in households
    ]
