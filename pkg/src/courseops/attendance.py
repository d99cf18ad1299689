"""Videoconference-log attendance checking for online shifts.

The evaluator merges each TA's presence intervals, clips them to the shift
occurrence window, and flags Absent, Late(minutes), or LeftEarly(minutes)
against policy thresholds.  Whole minutes are counted conservatively
(floor), so a 10-minute threshold tolerates anything up to 10:59 late.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from typing import Iterable, Sequence

from .model import (
    Modality,
    Schedule,
    Shift,
    TeachingAssistant,
    index_by_id,
)


class EmptyInput(Exception):
    """The log contained no data rows at all."""


class FlagKind(enum.Enum):
    ABSENT = "Absent"
    LATE = "Late"
    LEFT_EARLY = "LeftEarly"


_KIND_ORDER = {k: i for i, k in enumerate(FlagKind)}


@dataclass(frozen=True)
class SessionLogEntry:
    meeting_ref: str
    participant_name: str
    join_ts: datetime
    leave_ts: datetime
    ta_id: str | None = None

    def __post_init__(self) -> None:
        if self.leave_ts < self.join_ts:
            raise ValueError("leave precedes join")


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str
    raw: str


@dataclass(frozen=True)
class ParsedLog:
    entries: list[SessionLogEntry]
    rejects: list[RejectedRow]


@dataclass(frozen=True)
class AttendancePolicy:
    late_threshold_min: float = 10
    early_leave_threshold_min: float = 10
    name_resolution: str = "normalized"  # or "exact"

    def __post_init__(self) -> None:
        if self.late_threshold_min < 0 or self.early_leave_threshold_min < 0:
            raise ValueError("thresholds must be >= 0")
        if self.name_resolution not in ("exact", "normalized"):
            raise ValueError(f"unknown name_resolution {self.name_resolution!r}")


@dataclass(frozen=True)
class AttendanceFlag:
    ta_id: str
    shift_id: str
    occurrence_date: date
    kind: FlagKind
    minutes: int | None = None  # None for Absent


@dataclass(frozen=True)
class AttendanceNote:
    kind: str  # UnmatchedParticipant | Unmonitored
    subject: str
    detail: str


@dataclass(frozen=True)
class AttendanceReport:
    flags: list[AttendanceFlag]
    notes: list[AttendanceNote]


_LOG_COLUMNS = ("meeting_ref", "participant_name", "join_ts", "leave_ts")


def parse_session_log(csv_text: str) -> ParsedLog:
    """Parse a participant log; malformed rows land in rejects, not errors.

    Raises EmptyInput only when there is not a single data row.
    """
    reader = csv.DictReader(io.StringIO(csv_text))
    entries: list[SessionLogEntry] = []
    rejects: list[RejectedRow] = []
    saw_row = False
    for i, row in enumerate(reader, start=2):
        saw_row = True
        raw = ",".join(str(v) for v in row.values() if v is not None)
        missing = [c for c in _LOG_COLUMNS if not (row.get(c) or "").strip()]
        if missing:
            rejects.append(RejectedRow(i, f"missing {missing[0]}", raw))
            continue
        try:
            join_ts = datetime.fromisoformat(row["join_ts"].strip())
            leave_ts = datetime.fromisoformat(row["leave_ts"].strip())
        except ValueError as exc:
            rejects.append(RejectedRow(i, f"bad timestamp: {exc}", raw))
            continue
        if leave_ts < join_ts:
            rejects.append(RejectedRow(i, "leave precedes join", raw))
            continue
        entries.append(
            SessionLogEntry(
                meeting_ref=row["meeting_ref"].strip(),
                participant_name=row["participant_name"].strip(),
                join_ts=join_ts,
                leave_ts=leave_ts,
            )
        )
    if not saw_row:
        raise EmptyInput("no data rows in session log")
    return ParsedLog(entries, rejects)


def normalize_name(name: str) -> str:
    return " ".join(name.casefold().split())


def merge_intervals(
    intervals: Iterable[tuple[datetime, datetime]]
) -> list[tuple[datetime, datetime]]:
    """Coalesce overlapping or touching intervals; drops empty ones."""
    todo = sorted(i for i in intervals if i[1] > i[0])
    out: list[tuple[datetime, datetime]] = []
    for start, end in todo:
        if out and start <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], end))
        else:
            out.append((start, end))
    return out


def evaluate_attendance(
    entries: Sequence[SessionLogEntry],
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    policy: AttendancePolicy = AttendancePolicy(),
    *,
    week_of: date,
) -> AttendanceReport:
    """Flag Absent/Late/LeftEarly per (TA, online shift occurrence) in the
    week starting at ``week_of`` (a Monday).

    Only online shifts are judged; assigned in-person shifts produce an
    "unmonitored" note instead.  Participants that resolve to no roster TA
    (or ambiguously) become UnmatchedParticipant notes.
    """
    if week_of.weekday() != 0:
        raise ValueError(f"week_of {week_of} is not a Monday")
    tas = index_by_id(roster, "TA")
    shift_map = index_by_id(shifts, "shift")

    notes: list[AttendanceNote] = []
    by_name: dict[str, list[str]] = {}
    for ta in roster:
        key = ta.display_name if policy.name_resolution == "exact" else normalize_name(ta.display_name)
        by_name.setdefault(key, []).append(ta.id)

    presence: dict[str, list[tuple[datetime, datetime]]] = {}
    for e in entries:
        ta_id = e.ta_id
        if ta_id is None:
            key = (
                e.participant_name
                if policy.name_resolution == "exact"
                else normalize_name(e.participant_name)
            )
            matches = by_name.get(key, [])
            if len(matches) != 1:
                why = "ambiguous name" if len(matches) > 1 else "no roster match"
                notes.append(AttendanceNote("UnmatchedParticipant", e.participant_name, why))
                continue
            ta_id = matches[0]
        elif ta_id not in tas:
            notes.append(AttendanceNote("UnmatchedParticipant", ta_id, "unknown TA id"))
            continue
        presence.setdefault(ta_id, []).append((e.join_ts, e.leave_ts))
    merged = {ta_id: merge_intervals(iv) for ta_id, iv in presence.items()}

    flags: list[AttendanceFlag] = []
    unmonitored: set[str] = set()
    for a in schedule.sorted_assignments():
        shift = shift_map[a.shift_id]
        occur = week_of + timedelta(days=shift.slot.day.value)
        if shift.modality is not Modality.ONLINE:
            if shift.id not in unmonitored:
                unmonitored.add(shift.id)
                notes.append(
                    AttendanceNote("Unmonitored", shift.id, f"in-person on {occur.isoformat()}")
                )
            continue
        win_start = datetime.combine(occur, time(shift.slot.start_minute // 60,
                                                 shift.slot.start_minute % 60))
        win_end = win_start + timedelta(minutes=shift.slot.duration_min)
        inside = [
            (max(s, win_start), min(e, win_end))
            for s, e in merged.get(a.ta_id, [])
            if min(e, win_end) > max(s, win_start)
        ]
        if not inside:
            flags.append(AttendanceFlag(a.ta_id, shift.id, occur, FlagKind.ABSENT))
            continue
        late_min = int((inside[0][0] - win_start).total_seconds() // 60)
        if late_min > policy.late_threshold_min:
            flags.append(AttendanceFlag(a.ta_id, shift.id, occur, FlagKind.LATE, late_min))
        early_min = int((win_end - inside[-1][1]).total_seconds() // 60)
        if early_min > policy.early_leave_threshold_min:
            flags.append(
                AttendanceFlag(a.ta_id, shift.id, occur, FlagKind.LEFT_EARLY, early_min)
            )

    flags.sort(key=lambda f: (f.occurrence_date, f.shift_id, f.ta_id, _KIND_ORDER[f.kind]))
    notes.sort(key=lambda n: (n.kind, n.subject, n.detail))
    return AttendanceReport(flags, notes)
