"""Domain model for course staffing: time profiles, rosters, shifts, and the
schedule feasibility checker.

All hour quantities are stored as integer half-hour units so that budget
arithmetic is exact (several standard profiles carry 0.5-hour components).
Every type here is an immutable value object; the functions are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction
from typing import Iterable, Sequence

MINUTES_PER_DAY = 24 * 60


class Day(enum.IntEnum):
    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    SAT = 5
    SUN = 6

    @classmethod
    def parse(cls, text: str) -> "Day":
        try:
            return _DAY_BY_NAME[text.strip().lower()[:3]]
        except KeyError:
            raise ValueError(f"unknown day name: {text!r}") from None

    @property
    def short(self) -> str:
        return self.name.capitalize()

    @classmethod
    def of(cls, d: date) -> "Day":
        return cls(d.weekday())


_DAY_BY_NAME = {d.name.lower(): d for d in Day}

WEEKDAYS = (Day.MON, Day.TUE, Day.WED, Day.THU, Day.FRI)


def to_half_hours(hours: float | int | Fraction) -> int:
    """Convert an hour count to integer half-hour units; rejects finer splits."""
    doubled = Fraction(hours).limit_denominator(10**6) * 2
    if doubled.denominator != 1:
        raise ValueError(f"{hours} h is not a multiple of 0.5 h")
    return int(doubled)


def fmt_half_hours(hh: int) -> str:
    """Render half-hour units as an hour string: 12 -> '6', 5 -> '2.5'."""
    if hh % 2 == 0:
        return str(hh // 2)
    return f"{hh / 2:.1f}"


@dataclass(frozen=True)
class TimeProfile:
    """Weekly hour allocation for one TA contract, in half-hour units.

    ``regular_hh`` is the schedulable capacity (office hours, labs, grading);
    the remaining components are fixed commitments and never scheduled.
    """

    name: str
    contract_hh: int
    regular_hh: int
    meeting_attend_hh: int
    meeting_lead_hh: int
    functional_hh: int
    training_participate_hh: int
    training_facilitate_hh: int

    @classmethod
    def from_hours(
        cls,
        name: str,
        contract: float,
        regular: float,
        meeting_attend: float,
        meeting_lead: float,
        functional: float,
        training_participate: float,
        training_facilitate: float,
    ) -> "TimeProfile":
        return cls(
            name=name,
            contract_hh=to_half_hours(contract),
            regular_hh=to_half_hours(regular),
            meeting_attend_hh=to_half_hours(meeting_attend),
            meeting_lead_hh=to_half_hours(meeting_lead),
            functional_hh=to_half_hours(functional),
            training_participate_hh=to_half_hours(training_participate),
            training_facilitate_hh=to_half_hours(training_facilitate),
        )

    @property
    def components_hh(self) -> tuple[int, ...]:
        return (
            self.regular_hh,
            self.meeting_attend_hh,
            self.meeting_lead_hh,
            self.functional_hh,
            self.training_participate_hh,
            self.training_facilitate_hh,
        )

    @property
    def contract_hours(self) -> float:
        return self.contract_hh / 2

    @property
    def regular_task_hours(self) -> float:
        return self.regular_hh / 2

    @property
    def regular_minutes(self) -> int:
        return self.regular_hh * 30


_COMPONENT_FIELDS = (
    "regular_hh",
    "meeting_attend_hh",
    "meeting_lead_hh",
    "functional_hh",
    "training_participate_hh",
    "training_facilitate_hh",
)


def standard_profiles() -> list[TimeProfile]:
    """The six stock contract profiles, keyed by team kind, seniority, and
    contract size."""
    return [
        TimeProfile.from_hours("FuncLead12", 12, 4, 1, 1, 4, 0, 2),
        TimeProfile.from_hours("FuncMember12", 12, 8, 1, 0, 2.5, 0.5, 0),
        TimeProfile.from_hours("FuncMember6", 6, 2, 1, 0, 2.5, 0.5, 0),
        TimeProfile.from_hours("RegLead12", 12, 9, 0.5, 0.5, 0, 0, 2),
        TimeProfile.from_hours("RegMember12", 12, 11, 0.5, 0, 0, 0.5, 0),
        TimeProfile.from_hours("RegMember6", 6, 5, 0.5, 0, 0, 0.5, 0),
    ]


def standard_profile(name: str) -> TimeProfile:
    for p in standard_profiles():
        if p.name == name:
            return p
    raise KeyError(f"no standard profile named {name!r}")


def validate_profile(p: TimeProfile) -> list[str]:
    """Return one message per violated profile rule; empty means valid."""
    problems: list[str] = []
    for fname in _COMPONENT_FIELDS + ("contract_hh",):
        value = getattr(p, fname)
        if value < 0:
            problems.append(f"{fname[:-3]} hours are negative ({fmt_half_hours(value)})")
    total = sum(p.components_hh)
    if total != p.contract_hh:
        problems.append(
            f"sum {fmt_half_hours(total)} != contract {fmt_half_hours(p.contract_hh)}"
        )
    return problems


class FunctionalArea(enum.Enum):
    COMMUNICATION = "Communication"
    CONTENT = "Content"
    LOST_STUDENT = "LostStudent"
    PLAGIARISM = "Plagiarism"
    SCHEDULING = "Scheduling"


class Role(enum.Enum):
    LEAD = "Lead"
    MEMBER = "Member"


@dataclass(frozen=True)
class Team:
    """A small TA team; ``functional_area`` is None for regular teams."""

    id: str
    lead_ta: str
    member_ids: tuple[str, ...]
    functional_area: FunctionalArea | None = None

    def __post_init__(self) -> None:
        if not 1 <= len(self.member_ids) <= 6:
            raise ValueError(f"team {self.id}: member count {len(self.member_ids)} outside 1..6")
        if len(set(self.member_ids)) != len(self.member_ids):
            raise ValueError(f"team {self.id}: duplicate member ids")
        if self.lead_ta in self.member_ids:
            raise ValueError(f"team {self.id}: lead {self.lead_ta} listed as member")

    @property
    def is_functional(self) -> bool:
        return self.functional_area is not None


@dataclass(frozen=True, order=True)
class WeekSlot:
    """A recurring weekly time window; never crosses midnight."""

    day: Day
    start_minute: int
    duration_min: int

    def __post_init__(self) -> None:
        if not 0 <= self.start_minute < MINUTES_PER_DAY:
            raise ValueError(f"start_minute {self.start_minute} outside 0..1439")
        if self.duration_min <= 0:
            raise ValueError("duration_min must be positive")
        if self.start_minute + self.duration_min > MINUTES_PER_DAY:
            raise ValueError("slot crosses midnight")

    @property
    def end_minute(self) -> int:
        return self.start_minute + self.duration_min

    def overlaps(self, other: "WeekSlot") -> bool:
        return (
            self.day == other.day
            and self.start_minute < other.end_minute
            and other.start_minute < self.end_minute
        )

    def label(self) -> str:
        return (
            f"{self.day.short} {self.start_minute // 60:02d}:{self.start_minute % 60:02d}"
            f"+{self.duration_min}m"
        )


@dataclass(frozen=True)
class TeachingAssistant:
    id: str
    display_name: str
    email: str
    role: Role
    team_id: str
    profile: TimeProfile
    availability: frozenset[WeekSlot] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "availability", frozenset(self.availability))
        if self.role is Role.LEAD and not (
            self.profile.meeting_lead_hh > 0 or self.profile.training_facilitate_hh > 0
        ):
            raise ValueError(
                f"TA {self.id}: Lead role requires leading or facilitating hours in the profile"
            )


class ShiftKind(enum.Enum):
    OFFICE_HOUR = "OfficeHour"
    LAB = "Lab"


class Modality(enum.Enum):
    IN_PERSON = "InPerson"
    ONLINE = "Online"


@dataclass(frozen=True)
class Shift:
    id: str
    kind: ShiftKind
    slot: WeekSlot
    modality: Modality
    required_staff: int
    section_ref: str | None = None

    def __post_init__(self) -> None:
        if self.required_staff < 1:
            raise ValueError(f"shift {self.id}: required_staff must be >= 1")
        if self.kind is ShiftKind.LAB and not self.section_ref:
            raise ValueError(f"shift {self.id}: lab shifts need a section_ref")


@dataclass(frozen=True, order=True)
class Assignment:
    ta_id: str
    shift_id: str


@dataclass(frozen=True)
class Schedule:
    """A weekly staffing template anchored to the Monday it instantiates from."""

    assignments: frozenset[Assignment]
    week_anchor: date

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", frozenset(self.assignments))
        if self.week_anchor.weekday() != 0:
            raise ValueError(f"week_anchor {self.week_anchor} is not a Monday")

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, str]], week_anchor: date) -> "Schedule":
        seen: set[tuple[str, str]] = set()
        out: list[Assignment] = []
        for ta_id, shift_id in pairs:
            if (ta_id, shift_id) in seen:
                raise ValueError(f"duplicate assignment ({ta_id}, {shift_id})")
            seen.add((ta_id, shift_id))
            out.append(Assignment(ta_id, shift_id))
        return cls(frozenset(out), week_anchor)

    def sorted_assignments(self) -> list[Assignment]:
        return sorted(self.assignments, key=lambda a: (a.shift_id, a.ta_id))

    def by_shift(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for a in self.assignments:
            out.setdefault(a.shift_id, []).append(a.ta_id)
        for tas in out.values():
            tas.sort()
        return out

    def by_ta(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for a in self.assignments:
            out.setdefault(a.ta_id, []).append(a.shift_id)
        for shift_ids in out.values():
            shift_ids.sort()
        return out


class ViolationKind(enum.Enum):
    # Declaration order is the canonical report order.
    OVERLAP = "Overlap"
    UNAVAILABLE = "Unavailable"
    UNDERCOVERED = "Undercovered"
    OVERCOVERED = "Overcovered"
    BUDGET_EXCEEDED = "BudgetExceeded"


_KIND_ORDER = {k: i for i, k in enumerate(ViolationKind)}


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: str
    detail: str


class UnknownIdError(Exception):
    """An assignment references a TA or shift id that is not in the inputs."""


def index_by_id(items: Iterable, what: str) -> dict:
    out: dict = {}
    for item in items:
        if item.id in out:
            raise ValueError(f"duplicate {what} id {item.id!r}")
        out[item.id] = item
    return out


def merged_windows(slots: Iterable[WeekSlot]) -> dict[Day, list[tuple[int, int]]]:
    """Merge per-day minute windows; overlapping or touching windows coalesce."""
    by_day: dict[Day, list[tuple[int, int]]] = {}
    for s in slots:
        by_day.setdefault(s.day, []).append((s.start_minute, s.end_minute))
    merged: dict[Day, list[tuple[int, int]]] = {}
    for day, windows in by_day.items():
        windows.sort()
        acc: list[tuple[int, int]] = []
        for start, end in windows:
            if acc and start <= acc[-1][1]:
                acc[-1] = (acc[-1][0], max(acc[-1][1], end))
            else:
                acc.append((start, end))
        merged[day] = acc
    return merged


def availability_covers(availability: Iterable[WeekSlot], slot: WeekSlot) -> bool:
    """True when the slot lies entirely inside the TA's merged availability."""
    for start, end in merged_windows(availability).get(slot.day, []):
        if start <= slot.start_minute and slot.end_minute <= end:
            return True
    return False


def check_schedule(
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    *,
    allow_overcover: bool = False,
) -> list[Violation]:
    """Report every constraint violation in the schedule.

    Checks: exact per-shift staffing, no overlapping duties per TA, shifts
    inside TA availability, and weekly assigned minutes within the profile's
    schedulable budget.  An empty result means the schedule is feasible.
    The list is canonically ordered (kind, then subject, then detail).
    """
    tas = index_by_id(roster, "TA")
    shift_map = index_by_id(shifts, "shift")
    for a in schedule.assignments:
        if a.ta_id not in tas:
            raise UnknownIdError(f"assignment references unknown TA {a.ta_id!r}")
        if a.shift_id not in shift_map:
            raise UnknownIdError(f"assignment references unknown shift {a.shift_id!r}")

    violations: list[Violation] = []
    staffed = schedule.by_shift()

    for shift in shifts:
        n = len(staffed.get(shift.id, []))
        if n < shift.required_staff:
            violations.append(
                Violation(
                    ViolationKind.UNDERCOVERED,
                    shift.id,
                    f"assigned {n} < required {shift.required_staff}",
                )
            )
        elif n > shift.required_staff and not allow_overcover:
            violations.append(
                Violation(
                    ViolationKind.OVERCOVERED,
                    shift.id,
                    f"assigned {n} > required {shift.required_staff}",
                )
            )

    for ta_id, shift_ids in sorted(schedule.by_ta().items()):
        ta = tas[ta_id]
        owned = [shift_map[sid] for sid in shift_ids]
        for i, first in enumerate(owned):
            for second in owned[i + 1 :]:
                if first.slot.overlaps(second.slot):
                    violations.append(
                        Violation(
                            ViolationKind.OVERLAP,
                            ta_id,
                            f"shifts {first.id} and {second.id} overlap on {first.slot.day.short}",
                        )
                    )
        for shift in owned:
            if not availability_covers(ta.availability, shift.slot):
                violations.append(
                    Violation(
                        ViolationKind.UNAVAILABLE,
                        ta_id,
                        f"shift {shift.id} ({shift.slot.label()}) outside availability",
                    )
                )
        assigned_min = sum(s.slot.duration_min for s in owned)
        if assigned_min > ta.profile.regular_minutes:
            violations.append(
                Violation(
                    ViolationKind.BUDGET_EXCEEDED,
                    ta_id,
                    f"{_fmt_minutes_as_hours(assigned_min)} > "
                    f"{fmt_half_hours(ta.profile.regular_hh)}",
                )
            )

    violations.sort(key=lambda v: (_KIND_ORDER[v.kind], v.subject, v.detail))
    return violations


def _fmt_minutes_as_hours(minutes: int) -> str:
    if minutes % 60 == 0:
        return str(minutes // 60)
    return f"{minutes / 60:g}"
