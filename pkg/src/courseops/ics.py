"""Per-TA calendar export.

Emits a VCALENDAR with one weekly-recurring VEVENT per assigned shift, using
floating local times (the course timezone is a presentation concern).  Output
is byte-stable: UIDs derive from the TA/shift pair and DTSTAMP from the term
start, never from the wall clock.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from typing import Sequence

from .model import (
    Modality,
    Schedule,
    Shift,
    ShiftKind,
    TeachingAssistant,
    index_by_id,
)

_FOLD_LIMIT = 75  # octets per content line before folding


class UnknownTA(Exception):
    pass


@dataclass(frozen=True)
class CalendarEvent:
    uid: str
    summary: str
    dtstart: datetime
    dtend: datetime
    location_or_url: str
    rrule_weekly: bool

    def __post_init__(self) -> None:
        if self.dtend <= self.dtstart:
            raise ValueError("event ends before it starts")


def build_events(
    ta_id: str,
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    term_start: date,
) -> list[CalendarEvent]:
    tas = index_by_id(roster, "TA")
    if ta_id not in tas:
        raise UnknownTA(f"unknown TA {ta_id!r}")
    shift_map = index_by_id(shifts, "shift")
    monday = term_start - timedelta(days=term_start.weekday())

    events = []
    owned = schedule.by_ta().get(ta_id, [])
    for sid in sorted(owned, key=lambda s: (shift_map[s].slot.day, shift_map[s].slot.start_minute, s)):
        shift = shift_map[sid]
        start_day = monday + timedelta(days=shift.slot.day.value)
        dtstart = datetime.combine(
            start_day, time(shift.slot.start_minute // 60, shift.slot.start_minute % 60)
        )
        if shift.kind is ShiftKind.LAB:
            summary = f"Lab {shift.section_ref}"
        else:
            summary = f"Office hours ({shift.id})"
        if shift.modality is Modality.ONLINE:
            where = f"https://meet.course.example/{shift.id}"
        else:
            where = "Campus"
        events.append(
            CalendarEvent(
                uid=f"{ta_id}.{shift.id}@courseops",
                summary=summary,
                dtstart=dtstart,
                dtend=dtstart + timedelta(minutes=shift.slot.duration_min),
                location_or_url=where,
                rrule_weekly=True,
            )
        )
    return events


def export_ics(
    ta_id: str,
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    term_start: date,
    term_weeks: int,
) -> str:
    """Render one TA's weekly duties as an ICS document (CRLF, 75-octet
    folding).  A TA with no assignments yields a valid empty calendar."""
    if term_weeks < 1:
        raise ValueError("term_weeks must be >= 1")
    events = build_events(ta_id, schedule, roster, shifts, term_start)
    stamp = f"{term_start:%Y%m%d}T000000Z"

    lines = [
        "BEGIN:VCALENDAR",
        "VERSION:2.0",
        "PRODID:-//courseops//weekly duties//EN",
        "CALSCALE:GREGORIAN",
    ]
    for ev in events:
        lines += [
            "BEGIN:VEVENT",
            f"UID:{ev.uid}",
            f"DTSTAMP:{stamp}",
            f"DTSTART:{ev.dtstart:%Y%m%dT%H%M%S}",
            f"DTEND:{ev.dtend:%Y%m%dT%H%M%S}",
            f"RRULE:FREQ=WEEKLY;COUNT={term_weeks}",
            f"SUMMARY:{escape_text(ev.summary)}",
        ]
        if ev.location_or_url.startswith("http"):
            lines.append(f"URL:{ev.location_or_url}")
        else:
            lines.append(f"LOCATION:{escape_text(ev.location_or_url)}")
        lines.append("END:VEVENT")
    lines.append("END:VCALENDAR")
    return "".join(fold_line(line) + "\r\n" for line in lines)


def escape_text(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace(";", "\\;")
        .replace(",", "\\,")
        .replace("\n", "\\n")
    )


def fold_line(line: str) -> str:
    """Fold at 75 octets; continuation lines start with a single space."""
    raw = line.encode("utf-8")
    if len(raw) <= _FOLD_LIMIT:
        return line
    parts = []
    first = True
    while raw:
        # the continuation space counts toward the 75-octet budget
        cut = min(_FOLD_LIMIT if first else _FOLD_LIMIT - 1, len(raw))
        # never split inside a UTF-8 sequence
        while cut < len(raw) and (raw[cut] & 0xC0) == 0x80:
            cut -= 1
        parts.append(raw[:cut].decode("utf-8"))
        raw = raw[cut:]
        first = False
    return "\r\n ".join(parts)
