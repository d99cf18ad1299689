"""CSV loading and writing for rosters, shifts, teams, and schedules.

Formats:
  roster.csv   ta_id, name, email, role, team_id, profile_name, availability
               (availability: semicolon list of DAY:HH:MM+MIN tokens)
  shifts.csv   shift_id, kind, day, start, duration_min, modality,
               required_staff, section_ref
  teams.csv    team_id, kind, area, lead_ta, member_ids (semicolon list)
  schedule.csv ta_id, shift_id
"""

from __future__ import annotations

import csv
import io
from datetime import date
from typing import Iterable, Mapping

from .model import (
    Day,
    FunctionalArea,
    Modality,
    Role,
    Schedule,
    Shift,
    ShiftKind,
    Team,
    TeachingAssistant,
    TimeProfile,
    WeekSlot,
    standard_profiles,
)


class CsvFormatError(ValueError):
    """A CSV file is missing columns or a cell cannot be parsed."""


def _reader(text: str, required: tuple[str, ...], what: str) -> Iterable[dict]:
    rows = csv.DictReader(io.StringIO(text))
    header = rows.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise CsvFormatError(f"{what}: missing column(s) {', '.join(missing)}")
    return rows


def parse_slot_token(token: str) -> WeekSlot:
    """Parse one DAY:HH:MM+MIN availability token, e.g. 'Mon:08:00+120'."""
    try:
        day_part, rest = token.split(":", 1)
        time_part, dur_part = rest.split("+", 1)
        hh, mm = time_part.split(":")
        return WeekSlot(Day.parse(day_part), int(hh) * 60 + int(mm), int(dur_part))
    except (ValueError, IndexError) as exc:
        raise CsvFormatError(f"bad slot token {token!r}: {exc}") from None


def format_slot_token(slot: WeekSlot) -> str:
    return (
        f"{slot.day.short}:{slot.start_minute // 60:02d}:{slot.start_minute % 60:02d}"
        f"+{slot.duration_min}"
    )


def load_roster(
    text: str, profiles: Mapping[str, TimeProfile] | None = None
) -> list[TeachingAssistant]:
    if profiles is None:
        profiles = {p.name: p for p in standard_profiles()}
    out = []
    cols = ("ta_id", "name", "email", "role", "team_id", "profile_name", "availability")
    for row in _reader(text, cols, "roster"):
        profile_name = row["profile_name"].strip()
        if profile_name not in profiles:
            raise CsvFormatError(f"roster: unknown profile {profile_name!r}")
        tokens = [t for t in row["availability"].split(";") if t.strip()]
        try:
            role = Role(row["role"].strip())
        except ValueError:
            raise CsvFormatError(f"roster: unknown role {row['role']!r}") from None
        out.append(
            TeachingAssistant(
                id=row["ta_id"].strip(),
                display_name=row["name"].strip(),
                email=row["email"].strip(),
                role=role,
                team_id=row["team_id"].strip(),
                profile=profiles[profile_name],
                availability=frozenset(parse_slot_token(t.strip()) for t in tokens),
            )
        )
    return out


def load_shifts(text: str) -> list[Shift]:
    out = []
    cols = ("shift_id", "kind", "day", "start", "duration_min", "modality", "required_staff")
    for row in _reader(text, cols, "shifts"):
        try:
            kind = ShiftKind(row["kind"].strip())
            modality = Modality(row["modality"].strip())
        except ValueError as exc:
            raise CsvFormatError(f"shifts: {exc}") from None
        hh, mm = row["start"].strip().split(":")
        slot = WeekSlot(Day.parse(row["day"]), int(hh) * 60 + int(mm), int(row["duration_min"]))
        section = (row.get("section_ref") or "").strip() or None
        out.append(
            Shift(
                id=row["shift_id"].strip(),
                kind=kind,
                slot=slot,
                modality=modality,
                required_staff=int(row["required_staff"]),
                section_ref=section,
            )
        )
    return out


def load_teams(text: str) -> list[Team]:
    out = []
    for row in _reader(text, ("team_id", "kind", "area", "lead_ta", "member_ids"), "teams"):
        kind = row["kind"].strip().lower()
        area: FunctionalArea | None = None
        if kind == "functional":
            area = FunctionalArea(row["area"].strip())
        elif kind != "regular":
            raise CsvFormatError(f"teams: unknown kind {row['kind']!r}")
        members = tuple(m.strip() for m in row["member_ids"].split(";") if m.strip())
        out.append(
            Team(
                id=row["team_id"].strip(),
                lead_ta=row["lead_ta"].strip(),
                member_ids=members,
                functional_area=area,
            )
        )
    return out


def load_schedule(text: str, week_anchor: date) -> Schedule:
    pairs = [
        (row["ta_id"].strip(), row["shift_id"].strip())
        for row in _reader(text, ("ta_id", "shift_id"), "schedule")
    ]
    return Schedule.of(pairs, week_anchor)


def dump_schedule(schedule: Schedule) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ta_id", "shift_id"])
    for a in schedule.sorted_assignments():
        writer.writerow([a.ta_id, a.shift_id])
    return buf.getvalue()


def dump_roster(roster: Iterable[TeachingAssistant]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ta_id", "name", "email", "role", "team_id", "profile_name", "availability"])
    for ta in roster:
        tokens = ";".join(format_slot_token(s) for s in sorted(ta.availability))
        writer.writerow(
            [ta.id, ta.display_name, ta.email, ta.role.value, ta.team_id, ta.profile.name, tokens]
        )
    return buf.getvalue()


def dump_shifts(shifts: Iterable[Shift]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["shift_id", "kind", "day", "start", "duration_min", "modality", "required_staff", "section_ref"]
    )
    for s in shifts:
        writer.writerow(
            [
                s.id,
                s.kind.value,
                s.slot.day.short,
                f"{s.slot.start_minute // 60:02d}:{s.slot.start_minute % 60:02d}",
                s.slot.duration_min,
                s.modality.value,
                s.required_staff,
                s.section_ref or "",
            ]
        )
    return buf.getvalue()


def dump_teams(teams: Iterable[Team]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["team_id", "kind", "area", "lead_ta", "member_ids"])
    for t in teams:
        writer.writerow(
            [
                t.id,
                "functional" if t.is_functional else "regular",
                t.functional_area.value if t.functional_area else "",
                t.lead_ta,
                ";".join(t.member_ids),
            ]
        )
    return buf.getvalue()
