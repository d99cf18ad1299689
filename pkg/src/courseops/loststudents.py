"""Lost-student detection and case pipeline.

Detection is pure: onboarding rules (late join, no LMS access, no Discord)
before the add/drop date, grade-streak rules after it.  Cases then move
through a strict state machine: Identified -> Skipped/Assigned(ta) ->
Contacted -> MeetingHeld/Closed -> Closed.  Contact cooldown and round-robin
assignment live in ContactHistory, which the triage operator owns.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta
from typing import Iterable, Mapping, Sequence

from .model import Team


class DeliverableKind(enum.Enum):
    LAB = "Lab"
    QUIZ = "Quiz"
    MIDTERM = "Midterm"


class SchemaError(Exception):
    """The LMS export is missing a required column."""


class UnknownStudent(Exception):
    pass


class IllegalTransition(Exception):
    pass


@dataclass(frozen=True)
class Deliverable:
    kind: DeliverableKind
    index: int
    due_date: date
    max_score: float

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("deliverable index starts at 1")
        if self.max_score <= 0:
            raise ValueError("max_score must be positive")

    @property
    def column_stem(self) -> str:
        return f"{self.kind.value.lower()}{self.index}"


@dataclass(frozen=True)
class GradeCell:
    deliverable_kind: DeliverableKind
    index: int
    due_date: date
    max_score: float
    score: float | None
    submitted: bool

    def __post_init__(self) -> None:
        if self.score is not None:
            if not self.submitted:
                raise ValueError("score present on an unsubmitted deliverable")
            if not 0 <= self.score <= self.max_score:
                raise ValueError(f"score {self.score} outside 0..{self.max_score}")


@dataclass(frozen=True)
class StudentRecord:
    student_id: str
    enrollment_date: date
    first_lms_access: datetime | None
    discord_joined: bool
    grades: tuple[GradeCell, ...]

    def __post_init__(self) -> None:
        dues = [c.due_date for c in self.grades]
        if dues != sorted(dues):
            raise ValueError(f"student {self.student_id}: grades not in due-date order")


@dataclass(frozen=True)
class DetectionConfig:
    term_start: date
    add_drop_date: date
    recent_labs: int = 2
    recent_quizzes: int = 2
    recent_midterms: int = 1
    cutoff_fraction: Mapping[DeliverableKind, float] = field(
        default_factory=lambda: {k: 0.5 for k in DeliverableKind}
    )
    cooldown_days: int = 14
    any_of: bool = False  # flag on any recent failure instead of a full streak

    def __post_init__(self) -> None:
        object.__setattr__(self, "cutoff_fraction", dict(self.cutoff_fraction))
        for name in ("recent_labs", "recent_quizzes", "recent_midterms"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for kind in DeliverableKind:
            frac = self.cutoff_fraction.get(kind, 0.5)
            if not 0 <= frac <= 1:
                raise ValueError(f"cutoff for {kind.value} outside [0, 1]")
            self.cutoff_fraction.setdefault(kind, 0.5)
        if self.cooldown_days < 0:
            raise ValueError("cooldown_days must be >= 0")

    def window_for(self, kind: DeliverableKind) -> int:
        return {
            DeliverableKind.LAB: self.recent_labs,
            DeliverableKind.QUIZ: self.recent_quizzes,
            DeliverableKind.MIDTERM: self.recent_midterms,
        }[kind]


# -- triggers ----------------------------------------------------------------


@dataclass(frozen=True)
class LateJoin:
    pass


@dataclass(frozen=True)
class NoLmsAccess:
    pass


@dataclass(frozen=True)
class NoDiscord:
    pass


@dataclass(frozen=True)
class ProactiveRule:
    kind: DeliverableKind


@dataclass(frozen=True)
class Reported:
    by: str


Trigger = LateJoin | NoLmsAccess | NoDiscord | ProactiveRule | Reported


class CaseState(enum.Enum):
    IDENTIFIED = "Identified"
    SKIPPED = "Skipped"
    ASSIGNED = "Assigned"
    CONTACTED = "Contacted"
    MEETING_HELD = "MeetingHeld"
    CLOSED = "Closed"


_LEGAL_TRANSITIONS = {
    (CaseState.IDENTIFIED, CaseState.SKIPPED),
    (CaseState.IDENTIFIED, CaseState.ASSIGNED),
    (CaseState.SKIPPED, CaseState.CONTACTED),
    (CaseState.ASSIGNED, CaseState.CONTACTED),
    (CaseState.CONTACTED, CaseState.MEETING_HELD),
    (CaseState.CONTACTED, CaseState.CLOSED),
    (CaseState.MEETING_HELD, CaseState.CLOSED),
}


@dataclass(frozen=True)
class LostStudentCase:
    id: str
    student_id: str
    trigger: Trigger
    state: CaseState = CaseState.IDENTIFIED
    assigned_to: str | None = None
    contacted_on: date | None = None
    meeting_on: date | None = None
    closed_on: date | None = None
    notes: tuple[str, ...] = ()

    @property
    def open(self) -> bool:
        return self.state is not CaseState.CLOSED


def _advance(case: LostStudentCase, to: CaseState, **changes) -> LostStudentCase:
    if (case.state, to) not in _LEGAL_TRANSITIONS:
        raise IllegalTransition(f"{case.state.value} -> {to.value} (case {case.id})")
    return replace(case, state=to, **changes)


def mark_contacted(case: LostStudentCase, on: date, note: str = "") -> LostStudentCase:
    out = _advance(case, CaseState.CONTACTED, contacted_on=on)
    return replace(out, notes=out.notes + (note,)) if note else out


def mark_meeting(case: LostStudentCase, on: date) -> LostStudentCase:
    return _advance(case, CaseState.MEETING_HELD, meeting_on=on)


def close_case(case: LostStudentCase, on: date, note: str = "") -> LostStudentCase:
    out = _advance(case, CaseState.CLOSED, closed_on=on)
    return replace(out, notes=out.notes + (note,)) if note else out


# -- ingestion ----------------------------------------------------------------


@dataclass(frozen=True)
class IngestReject:
    line: int
    reason: str


@dataclass(frozen=True)
class IngestResult:
    records: list[StudentRecord]
    rejects: list[IngestReject]


_FIXED_COLUMNS = ("student_id", "enrollment_date", "first_lms_access", "discord_joined")
_TRUTHY = {"true", "yes", "1", "y"}
_FALSY = {"false", "no", "0", "n", ""}


def load_deliverables(csv_text: str) -> list[Deliverable]:
    """Deliverable catalog CSV: kind, index, due_date, max_score."""
    import csv as _csv
    import io as _io

    out = []
    for row in _csv.DictReader(_io.StringIO(csv_text)):
        out.append(
            Deliverable(
                kind=DeliverableKind(row["kind"].strip()),
                index=int(row["index"]),
                due_date=date.fromisoformat(row["due_date"].strip()),
                max_score=float(row["max_score"]),
            )
        )
    return out


def ingest_lms_export(
    csv_text: str, deliverables: Sequence[Deliverable]
) -> IngestResult:
    """Parse the wide-format LMS export against a deliverable catalog.

    The export carries `<kind><index>_score` / `_submitted` column pairs; due
    dates and maximum scores come from the catalog, which the export lacks.
    A missing column raises SchemaError; a bad row becomes one reject.
    """
    import csv as _csv
    import io as _io

    reader = _csv.DictReader(_io.StringIO(csv_text))
    header = reader.fieldnames or []
    ordered = sorted(deliverables, key=lambda d: (d.due_date, d.kind.value, d.index))
    needed = list(_FIXED_COLUMNS)
    for d in ordered:
        needed += [f"{d.column_stem}_score", f"{d.column_stem}_submitted"]
    for col in needed:
        if col not in header:
            raise SchemaError(f"missing column {col!r}")

    records: list[StudentRecord] = []
    rejects: list[IngestReject] = []
    for i, row in enumerate(reader, start=2):
        try:
            records.append(_parse_student_row(row, ordered))
        except ValueError as exc:
            rejects.append(IngestReject(i, str(exc)))
    return IngestResult(records, rejects)


def _parse_student_row(row: dict, ordered: Sequence[Deliverable]) -> StudentRecord:
    student_id = (row.get("student_id") or "").strip()
    if not student_id:
        raise ValueError("blank student_id")
    try:
        enrollment = date.fromisoformat(row["enrollment_date"].strip())
    except (ValueError, AttributeError):
        raise ValueError(f"bad enrollment_date {row.get('enrollment_date')!r}") from None
    access_raw = (row.get("first_lms_access") or "").strip()
    try:
        access = datetime.fromisoformat(access_raw) if access_raw else None
    except ValueError:
        raise ValueError(f"bad first_lms_access {access_raw!r}") from None
    discord_raw = (row.get("discord_joined") or "").strip().lower()
    if discord_raw in _TRUTHY:
        discord = True
    elif discord_raw in _FALSY:
        discord = False
    else:
        raise ValueError(f"bad discord_joined {discord_raw!r}")

    cells = []
    for d in ordered:
        score_raw = (row.get(f"{d.column_stem}_score") or "").strip()
        submitted_raw = (row.get(f"{d.column_stem}_submitted") or "").strip().lower()
        submitted = submitted_raw in _TRUTHY
        score = None
        if score_raw:
            try:
                score = float(score_raw)
            except ValueError:
                raise ValueError(f"bad score {score_raw!r} for {d.column_stem}") from None
        try:
            cells.append(
                GradeCell(d.kind, d.index, d.due_date, d.max_score, score, submitted)
            )
        except ValueError as exc:
            raise ValueError(f"{d.column_stem}: {exc}") from None
    return StudentRecord(student_id, enrollment, access, discord, tuple(cells))


# -- detection ----------------------------------------------------------------


def detect_onboarding(
    records: Sequence[StudentRecord], config: DetectionConfig, as_of: date
) -> list[LostStudentCase]:
    """One Identified case per matching onboarding criterion per student."""
    if as_of > config.add_drop_date:
        raise ValueError("onboarding detection runs before the add/drop date")
    out: list[LostStudentCase] = []
    late_cut = config.term_start + timedelta(days=7)
    for r in records:
        if r.enrollment_date > late_cut:
            out.append(_case(r.student_id, LateJoin(), "latejoin"))
        if r.first_lms_access is None:
            out.append(_case(r.student_id, NoLmsAccess(), "nolms"))
        if not r.discord_joined:
            out.append(_case(r.student_id, NoDiscord(), "nodiscord"))
    return out


def _failing(cell: GradeCell, cutoff: float) -> bool:
    if not cell.submitted:
        return True
    if cell.score is None:  # submitted, not yet graded: not evidence of failure
        return False
    return cell.score < cutoff * cell.max_score


def detect_proactive(
    records: Sequence[StudentRecord], config: DetectionConfig, as_of: date
) -> list[LostStudentCase]:
    """Flag students whose most recent graded window is all failing.

    For each kind (labs, quizzes, midterms, in that priority order) take the
    last N deliverables of that kind due by as_of; the rule fires when there
    are at least N and every one is unsubmitted or under the cutoff.  One
    case per student per run, carrying the first rule that fired.
    """
    if as_of <= config.add_drop_date:
        raise ValueError("proactive detection runs after the add/drop date")
    out: list[LostStudentCase] = []
    for r in records:
        for kind in DeliverableKind:
            window = config.window_for(kind)
            due = [c for c in r.grades if c.deliverable_kind is kind and c.due_date <= as_of]
            recent = due[-window:]
            if len(recent) < window:
                continue
            cutoff = config.cutoff_fraction[kind]
            hits = [_failing(c, cutoff) for c in recent]
            if (any(hits) if config.any_of else all(hits)):
                out.append(
                    _case(
                        r.student_id,
                        ProactiveRule(kind),
                        f"proactive-{as_of.isoformat()}",
                    )
                )
                break
    return out


def _case(student_id: str, trigger: Trigger, slug: str) -> LostStudentCase:
    return LostStudentCase(id=f"ls-{student_id}-{slug}", student_id=student_id, trigger=trigger)


# -- triage -------------------------------------------------------------------


class ContactHistory:
    """Last-contact dates plus per-team round-robin cursors.

    Owned by the triage operator; recording a contact feeds future cooldown
    decisions.
    """

    def __init__(
        self,
        last_contact: Mapping[str, date] | None = None,
        cursors: Mapping[str, int] | None = None,
    ):
        self.last_contact: dict[str, date] = dict(last_contact or {})
        self.cursors: dict[str, int] = dict(cursors or {})

    def record_contact(self, student_id: str, on: date) -> None:
        prev = self.last_contact.get(student_id)
        if prev is None or on > prev:
            self.last_contact[student_id] = on

    def next_assignee(self, team: Team) -> str:
        members = sorted(team.member_ids)
        k = self.cursors.get(team.id, 0)
        self.cursors[team.id] = k + 1
        return members[k % len(members)]


def triage(
    case: LostStudentCase,
    history: ContactHistory,
    team: Team,
    config: DetectionConfig,
    as_of: date,
) -> LostStudentCase:
    """Skip recently-contacted students; otherwise assign round-robin.

    The cooldown boundary is exclusive: a contact exactly cooldown_days ago
    no longer blocks assignment.
    """
    if case.state is not CaseState.IDENTIFIED:
        raise IllegalTransition(f"triage on a {case.state.value} case")
    last = history.last_contact.get(case.student_id)
    if last is not None and (as_of - last).days < config.cooldown_days:
        return _advance(case, CaseState.SKIPPED)
    return _advance(case, CaseState.ASSIGNED, assigned_to=history.next_assignee(team))


def record_report(
    existing: Iterable[LostStudentCase],
    known_students: Iterable[str],
    student_id: str,
    reporter: str,
    new_id: str,
) -> LostStudentCase:
    """A reactive report; idempotent against an already-open report for the
    same student."""
    if student_id not in set(known_students):
        raise UnknownStudent(f"unknown student {student_id!r}")
    for case in existing:
        if case.student_id == student_id and case.open and isinstance(case.trigger, Reported):
            return case
    return LostStudentCase(id=new_id, student_id=student_id, trigger=Reported(reporter))


# -- reporting ----------------------------------------------------------------


@dataclass(frozen=True)
class ConversionStats:
    contacted: int
    meetings: int
    rate_pct: int


def conversion_stats(cases: Iterable[LostStudentCase]) -> ConversionStats:
    """Contact-to-meeting funnel; rate is a round-half-up integer percent."""
    contacted = meetings = 0
    for c in cases:
        if c.contacted_on is not None:
            contacted += 1
        if c.meeting_on is not None:
            meetings += 1
    rate = (200 * meetings + contacted) // (2 * contacted) if contacted else 0
    return ConversionStats(contacted, meetings, rate)
