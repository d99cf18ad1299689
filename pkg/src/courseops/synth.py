"""Synthetic course instances.

``course_scale_instance`` builds a full-size term (45 TAs, 41 lab sections,
office hours 8am-8pm on weekdays) around a planted feasible schedule, so
solver benchmarks always run against a satisfiable input.  ``small_instance``
emits tiny random instances for cross-checking against exhaustive search.
"""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Sequence

from . import csvio
from .loststudents import Deliverable, DeliverableKind
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
    WEEKDAYS,
    check_schedule,
    standard_profile,
)
from .solver import DEFAULT_WEEK_ANCHOR

_ROSTER_MIX = (
    ("FuncLead12", 5),
    ("FuncMember12", 20),
    ("FuncMember6", 5),
    ("RegLead12", 3),
    ("RegMember12", 10),
    ("RegMember6", 2),
)

_LAB_STARTS = tuple(8 * 60 + i * 90 for i in range(8))  # 08:00 .. 18:30


@dataclass(frozen=True)
class Instance:
    roster: tuple[TeachingAssistant, ...]
    shifts: tuple[Shift, ...]
    teams: tuple[Team, ...]
    planted: Schedule


def _office_hour_shifts() -> list[Shift]:
    out = []
    for day in WEEKDAYS:
        for hour in range(8, 20):
            required = 2 if hour < 14 else 3
            out.append(
                Shift(
                    id=f"OH-{day.short}-{hour:02d}",
                    kind=ShiftKind.OFFICE_HOUR,
                    slot=_slot(day, hour * 60, 60),
                    modality=Modality.IN_PERSON if hour < 17 else Modality.ONLINE,
                    required_staff=required,
                )
            )
    return out


def _lab_shifts() -> list[Shift]:
    out = []
    for i in range(41):
        day = WEEKDAYS[i % 5]
        start = _LAB_STARTS[(i // 5) % len(_LAB_STARTS)]
        out.append(
            Shift(
                id=f"LAB-{i + 1:02d}",
                kind=ShiftKind.LAB,
                slot=_slot(day, start, 90),
                modality=Modality.IN_PERSON,
                required_staff=2,
                section_ref=f"L{i + 1:02d}",
            )
        )
    return out


def _slot(day: Day, start: int, dur: int):
    from .model import WeekSlot

    return WeekSlot(day, start, dur)


def _build_roster() -> list[TeachingAssistant]:
    roster = []
    i = 0
    for profile_name, count in _ROSTER_MIX:
        profile = standard_profile(profile_name)
        role = Role.LEAD if "Lead" in profile_name else Role.MEMBER
        for _ in range(count):
            i += 1
            roster.append(
                TeachingAssistant(
                    id=f"ta{i:02d}",
                    display_name=f"TA {i:02d}",
                    email=f"ta{i:02d}@course.example",
                    role=role,
                    team_id="",  # patched once teams exist
                    profile=profile,
                    availability=frozenset(),
                )
            )
    return roster


def _build_teams(roster: Sequence[TeachingAssistant]) -> list[Team]:
    by_profile: dict[str, list[str]] = {}
    for ta in roster:
        by_profile.setdefault(ta.profile.name, []).append(ta.id)

    teams = []
    areas = list(FunctionalArea)
    func_members = list(by_profile["FuncMember12"])
    func_small = list(by_profile["FuncMember6"])
    for k in range(5):
        members = tuple(func_members[k * 4 : k * 4 + 4]) + (func_small[k],)
        teams.append(
            Team(
                id=f"F{k + 1}",
                lead_ta=by_profile["FuncLead12"][k],
                member_ids=members,
                functional_area=areas[k],
            )
        )
    reg_members = by_profile["RegMember12"] + by_profile["RegMember6"]
    for k in range(3):
        teams.append(
            Team(
                id=f"R{k + 1}",
                lead_ta=by_profile["RegLead12"][k],
                member_ids=tuple(reg_members[k * 4 : k * 4 + 4]),
            )
        )
    return teams


def _plant_assignments(
    roster: Sequence[TeachingAssistant], shifts: Sequence[Shift]
) -> dict[str, tuple[str, ...]]:
    remaining = {ta.id: ta.profile.regular_minutes for ta in roster}
    slots: dict[str, list] = {ta.id: [] for ta in roster}
    staff: dict[str, tuple[str, ...]] = {}
    for shift in sorted(shifts, key=lambda s: (s.slot.day, s.slot.start_minute, s.id)):
        dur = shift.slot.duration_min
        candidates = [
            t
            for t in remaining
            if remaining[t] >= dur and not any(shift.slot.overlaps(s) for s in slots[t])
        ]
        candidates.sort(key=lambda t: (-remaining[t], t))
        if len(candidates) < shift.required_staff:
            raise AssertionError(f"instance construction failed at shift {shift.id}")
        chosen = candidates[: shift.required_staff]
        staff[shift.id] = tuple(chosen)
        for t in chosen:
            remaining[t] -= dur
            slots[t].append(shift.slot)
    return staff


def course_scale_instance(seed: int = 0) -> Instance:
    """A full-term instance sized like a 1,000-student course, guaranteed
    feasible by construction."""
    rng = random.Random(seed)
    shifts = _office_hour_shifts() + _lab_shifts()
    roster = _build_roster()
    teams = _build_teams(roster)
    team_of = {}
    for team in teams:
        team_of[team.lead_ta] = team.id
        for m in team.member_ids:
            team_of[m] = team.id

    staff = _plant_assignments(roster, shifts)
    shift_map = {s.id: s for s in shifts}
    availability: dict[str, set] = {ta.id: set() for ta in roster}
    for sid, combo in staff.items():
        for t in combo:
            availability[t].add(shift_map[sid].slot)
    # Slack windows beyond the planted duties, so swaps have somewhere to go.
    for ta in roster:
        for _ in range(2):
            day = rng.choice(WEEKDAYS)
            start = rng.randrange(8, 17) * 60
            availability[ta.id].add(_slot(day, start, 120))

    final_roster = tuple(
        TeachingAssistant(
            id=ta.id,
            display_name=ta.display_name,
            email=ta.email,
            role=ta.role,
            team_id=team_of[ta.id],
            profile=ta.profile,
            availability=frozenset(availability[ta.id]),
        )
        for ta in roster
    )
    planted = Schedule.of(
        sorted((t, sid) for sid, combo in staff.items() for t in combo),
        DEFAULT_WEEK_ANCHOR,
    )
    problems = check_schedule(planted, final_roster, shifts)
    if problems:
        raise AssertionError(f"planted schedule invalid: {problems[0]}")
    return Instance(final_roster, tuple(shifts), tuple(teams), planted)


def small_instance(
    rng: random.Random, max_tas: int = 4, max_shifts: int = 5
) -> tuple[list[TeachingAssistant], list[Shift]]:
    """A tiny random instance for exhaustive cross-checks; roughly half come
    out feasible."""
    days = (Day.MON, Day.TUE, Day.WED)
    n_tas = rng.randint(1, max_tas)
    n_shifts = rng.randint(1, max_shifts)

    shifts = []
    for j in range(n_shifts):
        start = rng.randrange(16, 25) * 30
        shifts.append(
            Shift(
                id=f"s{j}",
                kind=ShiftKind.OFFICE_HOUR,
                slot=_slot(rng.choice(days), start, rng.choice((30, 60, 90))),
                modality=Modality.IN_PERSON,
                required_staff=2 if rng.random() < 0.2 and n_tas >= 2 else 1,
            )
        )

    roster = []
    for i in range(n_tas):
        regular = rng.choice((1, 2, 3, 4)) / 2  # 0.5 .. 2.0 hours
        profile = TimeProfile.from_hours(f"Tiny{i}", regular, regular, 0, 0, 0, 0, 0)
        windows = set()
        # Mostly windows that actually contain a shift, so both verdicts occur.
        for s in shifts:
            if rng.random() < 0.5:
                windows.add(s.slot)
        for _ in range(rng.randint(0, 2)):
            start = rng.randrange(16, 25) * 30
            windows.add(_slot(rng.choice(days), start, rng.choice((30, 60, 90, 120))))
        roster.append(
            TeachingAssistant(
                id=f"t{i}",
                display_name=f"T{i}",
                email=f"t{i}@x",
                role=Role.MEMBER,
                team_id="R1",
                profile=profile,
                availability=frozenset(windows),
            )
        )
    return roster, shifts


def scheduling_duty_roster(teams: Sequence[Team]) -> dict[str, str]:
    """Mon..Fri triage duty, rotating through the scheduling team's members."""
    schedulers = next(t for t in teams if t.functional_area is FunctionalArea.SCHEDULING)
    people = sorted(schedulers.member_ids)
    return {day.short: people[i % len(people)] for i, day in enumerate(WEEKDAYS)}


TERM_START = date(2022, 9, 5)
ADD_DROP_DATE = date(2022, 9, 19)
TERM_WEEKS = 14


def deliverable_catalog() -> list[Deliverable]:
    """Four weekly labs, three quizzes, one midterm over the first five weeks."""
    out = []
    for i in range(4):
        out.append(Deliverable(DeliverableKind.LAB, i + 1, TERM_START + timedelta(days=4 + 7 * i), 10))
    for i in range(3):
        out.append(Deliverable(DeliverableKind.QUIZ, i + 1, TERM_START + timedelta(days=9 + 7 * i), 20))
    out.append(Deliverable(DeliverableKind.MIDTERM, 1, TERM_START + timedelta(days=32), 100))
    return out


@dataclass(frozen=True)
class StudentFixture:
    csv_text: str
    deliverables: tuple[Deliverable, ...]
    late_joiners: tuple[str, ...]
    non_accessors: tuple[str, ...]
    failing_labs: tuple[str, ...]
    failing_quizzes: tuple[str, ...]
    failing_midterm: tuple[str, ...]


def student_fixture(seed: int = 0, count: int = 120) -> StudentFixture:
    """An LMS export of ``count`` students with disjoint planted groups:
    9 late joiners, 6 who never opened the LMS, and a handful of grade-streak
    failures for the post-add/drop rules.  Everyone is on Discord so the
    onboarding case count is exactly 9 + 6."""
    rng = random.Random(seed)
    catalog = deliverable_catalog()
    ids = [f"s{i + 1:04d}" for i in range(count)]
    late = tuple(ids[0:9])
    no_access = tuple(ids[9:15])
    bad_labs = tuple(ids[15:27])
    bad_quizzes = tuple(ids[27:32])
    bad_midterm = tuple(ids[32:35])

    header = ["student_id", "enrollment_date", "first_lms_access", "discord_joined"]
    for d in sorted(catalog, key=lambda d: (d.due_date, d.kind.value, d.index)):
        header += [f"{d.column_stem}_score", f"{d.column_stem}_submitted"]

    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for sid in ids:
        enrollment = TERM_START + timedelta(days=9) if sid in late else TERM_START
        access = "" if sid in no_access else f"{enrollment.isoformat()}T09:00:00"
        row = [sid, enrollment.isoformat(), access, "true"]
        for d in sorted(catalog, key=lambda d: (d.due_date, d.kind.value, d.index)):
            fail_kind = (
                (sid in bad_labs and d.kind is DeliverableKind.LAB and d.index >= 3)
                or (sid in bad_quizzes and d.kind is DeliverableKind.QUIZ and d.index >= 2)
                or (sid in bad_midterm and d.kind is DeliverableKind.MIDTERM)
            )
            if fail_kind:
                if rng.random() < 0.5:
                    row += ["", "false"]  # unsubmitted
                else:
                    row += [str(round(0.2 * d.max_score, 1)), "true"]
            else:
                score = round(d.max_score * rng.uniform(0.55, 1.0), 1)
                row += [str(score), "true"]
        buf.write(",".join(row) + "\n")
    return StudentFixture(
        buf.getvalue(), tuple(catalog), late, no_access, bad_labs, bad_quizzes, bad_midterm
    )


def session_log_fixture(
    inst: Instance, week_of: date, seed: int = 0
) -> tuple[str, dict[str, list[tuple[str, str]]]]:
    """A participant log for the week's online shifts with planted problems.

    Returns (csv_text, planted) where planted maps flag kind name to the
    (ta_id, shift_id) pairs that should trigger it; everyone else attends the
    full window.
    """
    rng = random.Random(seed)
    shift_map = {s.id: s for s in inst.shifts}
    by_name = {ta.id: ta.display_name for ta in inst.roster}
    online = [
        a
        for a in inst.planted.sorted_assignments()
        if shift_map[a.shift_id].modality is Modality.ONLINE
    ]
    rng.shuffle(online)
    planted: dict[str, list[tuple[str, str]]] = {"Absent": [], "Late": [], "LeftEarly": []}
    rows = ["meeting_ref,participant_name,join_ts,leave_ts"]
    for i, a in enumerate(online):
        shift = shift_map[a.shift_id]
        occur = week_of + timedelta(days=shift.slot.day.value)
        start = datetime.combine(occur, time(shift.slot.start_minute // 60,
                                             shift.slot.start_minute % 60))
        end = start + timedelta(minutes=shift.slot.duration_min)
        name = by_name[a.ta_id]
        if i == 0:
            planted["Absent"].append((a.ta_id, shift.id))
            continue  # no log row at all
        if i == 1:
            planted["Late"].append((a.ta_id, shift.id))
            join = start + timedelta(minutes=17)
            rows.append(f"{shift.id},{name},{join.isoformat()},{end.isoformat()}")
            continue
        if i == 2:
            planted["LeftEarly"].append((a.ta_id, shift.id))
            leave = end - timedelta(minutes=22)
            rows.append(f"{shift.id},{name},{start.isoformat()},{leave.isoformat()}")
            continue
        rows.append(f"{shift.id},{name},{start.isoformat()},{end.isoformat()}")
    return "\n".join(rows) + "\n", planted


def write_demo_dataset(target: Path, seed: int = 0) -> Instance:
    """Write a ready-to-serve data directory: roster, shifts, teams, the
    planted schedule, duty roster, term dates, and LMS/session fixtures."""
    inst = course_scale_instance(seed)
    target.mkdir(parents=True, exist_ok=True)
    (target / "roster.csv").write_text(csvio.dump_roster(inst.roster))
    (target / "shifts.csv").write_text(csvio.dump_shifts(inst.shifts))
    (target / "teams.csv").write_text(csvio.dump_teams(inst.teams))
    (target / "schedule.csv").write_text(csvio.dump_schedule(inst.planted))
    duty = scheduling_duty_roster(inst.teams)
    (target / "duty_roster.json").write_text(json.dumps(duty, indent=2) + "\n")
    (target / "term.json").write_text(
        json.dumps(
            {
                "term_start": TERM_START.isoformat(),
                "add_drop_date": ADD_DROP_DATE.isoformat(),
                "term_weeks": TERM_WEEKS,
            },
            indent=2,
        )
        + "\n"
    )
    students = student_fixture(seed)
    (target / "lms_export.csv").write_text(students.csv_text)
    lines = ["kind,index,due_date,max_score"]
    for d in students.deliverables:
        lines.append(f"{d.kind.value},{d.index},{d.due_date.isoformat()},{d.max_score:g}")
    (target / "deliverables.csv").write_text("\n".join(lines) + "\n")
    log_text, _ = session_log_fixture(inst, TERM_START, seed)
    (target / "session_log.csv").write_text(log_text)
    return inst
