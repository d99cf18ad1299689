"""Swap-request lifecycle: submission guards, claiming, resolution safety,
escalation timing, and scheduled reverts."""

import random
from datetime import date, datetime, timedelta

import pytest

from courseops.model import (
    Assignment,
    Day,
    Modality,
    Role,
    Schedule,
    Shift,
    ShiftKind,
    TeachingAssistant,
    TimeProfile,
    UnknownIdError,
    WeekSlot,
    check_schedule,
)
from courseops.workflow import (
    Cancelled,
    DutyRoster,
    InvalidResolution,
    ModalityChange,
    NoOwner,
    NotAssigned,
    OccurrenceMismatch,
    OneOff,
    PastDate,
    PeerSwap,
    Replacement,
    RequestState,
    SchedulePatch,
    SwapRequest,
    Until,
    WrongState,
    auto_claim,
    due_reverts,
    effective_assignments,
    effective_shifts,
    escalate,
    monday_of,
    occurrence_in_week,
    resolve,
    submit_request,
    sunday_of,
)

MONDAY = date(2022, 9, 5)
TODAY = date(2022, 9, 1)
NOW = datetime(2022, 9, 1, 9, 0)


def _ta(ta_id, hours, slots):
    return TeachingAssistant(
        id=ta_id,
        display_name=ta_id,
        email=f"{ta_id}@x",
        role=Role.MEMBER,
        team_id="R1",
        profile=TimeProfile.from_hours(f"P{ta_id}", hours, hours, 0, 0, 0, 0, 0),
        availability=frozenset(slots),
    )


def _oh(sid, day, start_min, dur=60, modality=Modality.IN_PERSON):
    return Shift(
        id=sid,
        kind=ShiftKind.OFFICE_HOUR,
        slot=WeekSlot(day, start_min, dur),
        modality=modality,
        required_staff=1,
    )


WIDE = [WeekSlot(d, 8 * 60, 10 * 60) for d in (Day.MON, Day.TUE, Day.WED, Day.THU, Day.FRI)]


def _fixture():
    roster = [
        _ta("ann", 4, WIDE),
        _ta("ben", 4, WIDE),
        _ta("cal", 4, [WeekSlot(Day.WED, 8 * 60, 10 * 60)]),
    ]
    shifts = [
        _oh("mon-10", Day.MON, 10 * 60),
        _oh("tue-10", Day.TUE, 10 * 60),
        _oh("wed-10", Day.WED, 10 * 60),
        _oh("online-thu", Day.THU, 10 * 60, modality=Modality.ONLINE),
    ]
    schedule = Schedule.of(
        [("ann", "mon-10"), ("ben", "tue-10"), ("cal", "wed-10"), ("ann", "online-thu")],
        MONDAY,
    )
    assert check_schedule(schedule, roster, shifts) == []
    return roster, shifts, schedule


def _submit(shift_id="mon-10", requester="ann", occurrence=MONDAY, duration=OneOff(), rid="r1"):
    roster, shifts, schedule = _fixture()
    return submit_request(
        rid, requester, shift_id, occurrence, duration, "conference trip",
        schedule, shifts, today=TODAY, now=NOW,
    )


DUTY = DutyRoster(
    {Day.MON: "ann", Day.TUE: "ben", Day.WED: "cal", Day.THU: "ann", Day.FRI: "ben"}
)


# ---------------------------------------------------------------- submit


def test_submit_happy_path():
    req = _submit()
    assert req.state is RequestState.SUBMITTED
    assert req.claimed_by is None
    assert req.occurrence_date == MONDAY


def test_submit_unknown_shift():
    with pytest.raises(UnknownIdError):
        _submit(shift_id="ghost")


def test_submit_not_assigned():
    with pytest.raises(NotAssigned):
        _submit(requester="ben")  # ben does not staff mon-10


def test_submit_past_date():
    roster, shifts, schedule = _fixture()
    with pytest.raises(PastDate):
        submit_request(
            "r1", "ann", "mon-10", date(2022, 8, 29), OneOff(), "x",
            schedule, shifts, today=TODAY, now=NOW,
        )


def test_submit_today_is_allowed():
    roster, shifts, schedule = _fixture()
    req = submit_request(
        "r1", "cal", "wed-10", date(2022, 9, 7), OneOff(), "x",
        schedule, shifts, today=date(2022, 9, 7), now=NOW,
    )
    assert req.state is RequestState.SUBMITTED


def test_submit_weekday_mismatch():
    # mon-10 runs on Mondays; 2022-09-06 is a Tuesday
    with pytest.raises(OccurrenceMismatch):
        _submit(occurrence=date(2022, 9, 6))


def test_submit_until_must_reach_occurrence():
    with pytest.raises(OccurrenceMismatch):
        _submit(duration=Until(end=date(2022, 9, 4)))
    req = _submit(duration=Until(end=date(2022, 10, 3)))
    assert req.duration_of_change == Until(end=date(2022, 10, 3))


# ---------------------------------------------------------------- claim


def test_auto_claim_assigns_duty_owner():
    req = auto_claim(_submit(), DUTY)
    assert req.state is RequestState.CLAIMED
    assert req.claimed_by == "ann"  # Monday duty


def test_auto_claim_weekend_has_no_owner():
    # a Saturday shift occurrence has nobody on duty
    roster, shifts, schedule = _fixture()
    shifts = shifts + [_oh("sat-10", Day.SAT, 10 * 60)]
    schedule = Schedule(
        schedule.assignments | {Assignment("ben", "sat-10")}, MONDAY
    )
    req = submit_request(
        "r1", "ben", "sat-10", date(2022, 9, 10), OneOff(), "x",
        schedule, shifts, today=TODAY, now=NOW,
    )
    with pytest.raises(NoOwner):
        auto_claim(req, DUTY)
    assert req.state is RequestState.SUBMITTED  # unchanged


def test_auto_claim_requires_submitted():
    claimed = auto_claim(_submit(), DUTY)
    with pytest.raises(WrongState):
        auto_claim(claimed, DUTY)


def test_duty_roster_must_cover_weekdays():
    with pytest.raises(ValueError, match="Fri"):
        DutyRoster({Day.MON: "a", Day.TUE: "b", Day.WED: "c", Day.THU: "d"})


# ---------------------------------------------------------------- resolve


def test_resolve_requires_claimed():
    roster, shifts, schedule = _fixture()
    with pytest.raises(WrongState):
        resolve(_submit(), Cancelled(), schedule, roster, shifts)


def test_resolve_replacement():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    outcome = resolve(req, Replacement(substitute="ben"), schedule, roster, shifts)
    assert outcome.request.state is RequestState.RESOLVED
    assert outcome.request.revert_date is None
    assert Assignment("ben", "mon-10") in outcome.schedule.assignments
    assert Assignment("ann", "mon-10") not in outcome.schedule.assignments
    assert check_schedule(outcome.schedule, roster, shifts) == []
    assert outcome.patch.window_start == MONDAY
    assert outcome.patch.window_end == sunday_of(MONDAY)


def test_resolve_replacement_rejects_ineligible():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    # cal is only available on Wednesdays
    with pytest.raises(InvalidResolution, match="not an eligible replacement"):
        resolve(req, Replacement(substitute="cal"), schedule, roster, shifts)


def test_resolve_replacement_rejects_requester():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    with pytest.raises(InvalidResolution):
        resolve(req, Replacement(substitute="ann"), schedule, roster, shifts)


def test_resolve_peer_swap():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    outcome = resolve(
        req, PeerSwap(counterparty="ben", counterparty_shift_id="tue-10"),
        schedule, roster, shifts,
    )
    got = outcome.schedule.assignments
    assert Assignment("ben", "mon-10") in got
    assert Assignment("ann", "tue-10") in got
    assert Assignment("ann", "mon-10") not in got
    assert Assignment("ben", "tue-10") not in got
    assert check_schedule(outcome.schedule, roster, shifts) == []


def test_resolve_peer_swap_rejects_self():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    with pytest.raises(InvalidResolution, match="counterparty equals requester"):
        resolve(
            req, PeerSwap(counterparty="ann", counterparty_shift_id="online-thu"),
            schedule, roster, shifts,
        )


def test_resolve_peer_swap_rejects_unassigned_counterparty():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    with pytest.raises(InvalidResolution, match="not assigned"):
        resolve(
            req, PeerSwap(counterparty="ben", counterparty_shift_id="wed-10"),
            schedule, roster, shifts,
        )


def test_resolve_peer_swap_rejects_created_overlap():
    # after the swap ann would hold both Monday 10:00 shifts at once
    roster, shifts, schedule = _fixture()
    shifts = shifts + [_oh("mon-1030", Day.MON, 10 * 60 + 30)]
    schedule = Schedule(schedule.assignments | {Assignment("ben", "mon-1030")}, MONDAY)
    req = submit_request(
        "r1", "ann", "online-thu", date(2022, 9, 8), OneOff(), "x",
        schedule, shifts, today=TODAY, now=NOW,
    )
    req = auto_claim(req, DUTY)
    with pytest.raises(InvalidResolution, match="overlap"):
        resolve(
            req, PeerSwap(counterparty="ben", counterparty_shift_id="mon-1030"),
            schedule, roster, shifts,
        )


def test_resolve_peer_swap_rejects_unavailable_counterparty():
    # cal cannot take a Monday shift
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    with pytest.raises(InvalidResolution, match="unavailable"):
        resolve(
            req, PeerSwap(counterparty="cal", counterparty_shift_id="wed-10"),
            schedule, roster, shifts,
        )


def test_resolve_modality_change():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    outcome = resolve(req, ModalityChange(), schedule, roster, shifts)
    assert outcome.patch.online_shift_ids == ("mon-10",)
    assert outcome.patch.drops == () and outcome.patch.adds == ()
    week = effective_shifts(shifts, [outcome.patch], MONDAY)
    assert next(s for s in week if s.id == "mon-10").modality is Modality.ONLINE
    # the following week reverts to in-person
    later = effective_shifts(shifts, [outcome.patch], MONDAY + timedelta(days=7))
    assert next(s for s in later if s.id == "mon-10").modality is Modality.IN_PERSON


def test_resolve_modality_change_already_online():
    roster, shifts, schedule = _fixture()
    req = submit_request(
        "r1", "ann", "online-thu", date(2022, 9, 8), OneOff(), "x",
        schedule, shifts, today=TODAY, now=NOW,
    )
    req = auto_claim(req, DUTY)
    with pytest.raises(InvalidResolution, match="already online"):
        resolve(req, ModalityChange(), schedule, roster, shifts)


def test_resolve_cancelled_is_noop_patch():
    roster, shifts, schedule = _fixture()
    req = auto_claim(_submit(), DUTY)
    outcome = resolve(req, Cancelled(), schedule, roster, shifts)
    assert outcome.schedule.assignments == schedule.assignments
    assert outcome.patch.drops == () and outcome.patch.adds == ()


def test_resolve_until_sets_revert_date():
    roster, shifts, schedule = _fixture()
    end = date(2022, 10, 3)
    req = auto_claim(_submit(duration=Until(end=end)), DUTY)
    outcome = resolve(req, Replacement(substitute="ben"), schedule, roster, shifts)
    assert outcome.request.revert_date == end
    assert outcome.patch.window_end == end
    # patch applies through the end date and not after
    covered_week = effective_assignments(schedule, shifts, [outcome.patch], end)
    assert Assignment("ben", "mon-10") in covered_week.assignments
    after = effective_assignments(
        schedule, shifts, [outcome.patch], end + timedelta(days=7)
    )
    assert Assignment("ann", "mon-10") in after.assignments


def test_request_invariants():
    with pytest.raises(ValueError, match="without a resolution"):
        SwapRequest(
            id="r", requester="a", shift_id="s", occurrence_date=MONDAY,
            duration_of_change=OneOff(), reason="", state=RequestState.RESOLVED,
            created_at=NOW,
        )
    with pytest.raises(ValueError, match="revert_date"):
        SwapRequest(
            id="r", requester="a", shift_id="s", occurrence_date=MONDAY,
            duration_of_change=Until(end=date(2022, 10, 3)), reason="",
            state=RequestState.RESOLVED, created_at=NOW,
            resolution=Cancelled(), revert_date=None,
        )


# ---------------------------------------------------------------- escalate


def test_escalate_within_lead_window():
    req = _submit()  # mon-10 starts 2022-09-05 10:00
    close = datetime(2022, 9, 4, 11, 0)  # 23h before start
    assert escalate(req, close, _fixture()[1]).state is RequestState.ESCALATED


def test_escalate_far_out_is_unchanged():
    req = _submit()
    early = datetime(2022, 9, 4, 9, 59)  # 24h01m before start
    assert escalate(req, early, _fixture()[1]).state is RequestState.SUBMITTED


def test_escalate_boundary_exact_lead_is_unchanged():
    req = _submit()
    at_lead = datetime(2022, 9, 4, 10, 0)  # exactly 24h
    assert escalate(req, at_lead, _fixture()[1]).state is RequestState.SUBMITTED


def test_escalate_claimed_and_custom_lead():
    req = auto_claim(_submit(), DUTY)
    now = datetime(2022, 9, 5, 8, 30)
    assert escalate(req, now, _fixture()[1], lead_hours=1).state is RequestState.CLAIMED
    assert escalate(req, now, _fixture()[1], lead_hours=2).state is RequestState.ESCALATED


def test_escalate_resolved_is_wrong_state():
    roster, shifts, schedule = _fixture()
    outcome = resolve(auto_claim(_submit(), DUTY), Cancelled(), schedule, roster, shifts)
    with pytest.raises(WrongState):
        escalate(outcome.request, NOW, shifts)


# ---------------------------------------------------------------- reverts


def _resolved_until(rid, end, requester="ann", shift_id="mon-10"):
    roster, shifts, schedule = _fixture()
    req = submit_request(
        rid, requester, shift_id, MONDAY, Until(end=end), "x",
        schedule, shifts, today=TODAY, now=NOW,
    )
    return resolve(auto_claim(req, DUTY), Cancelled(), schedule, roster, shifts).request


def test_due_reverts_boundary_inclusive():
    end = date(2022, 10, 3)
    req = _resolved_until("r1", end)
    assert due_reverts([req], [], end - timedelta(days=1)) == []
    assert due_reverts([req], [], end) == [req]
    assert due_reverts([req], [], end + timedelta(days=30)) == [req]


def test_due_reverts_skips_acknowledged_and_oneoffs():
    end = date(2022, 10, 3)
    until = _resolved_until("r1", end)
    roster, shifts, schedule = _fixture()
    oneoff = resolve(auto_claim(_submit(rid="r2"), DUTY), Cancelled(), schedule, roster, shifts).request
    assert due_reverts([until, oneoff], ["r1"], date(2023, 1, 1)) == []


def test_due_reverts_sorted_by_date_then_id():
    a = _resolved_until("r-b", date(2022, 10, 10))
    b = _resolved_until("r-a", date(2022, 10, 10))
    c = _resolved_until("r-z", date(2022, 10, 3))
    got = due_reverts([a, b, c], [], date(2022, 12, 1))
    assert [r.id for r in got] == ["r-z", "r-a", "r-b"]


def test_due_reverts_matches_linear_oracle():
    rng = random.Random(7)
    pool = []
    for i in range(40):
        end = date(2022, 9, 5) + timedelta(days=7 * rng.randrange(1, 9))
        pool.append(_resolved_until(f"r{i:02d}", end))
    acked = {r.id for r in pool if rng.random() < 0.3}
    for probe in range(0, 70, 7):
        as_of = date(2022, 9, 5) + timedelta(days=probe)
        expected = sorted(
            (r for r in pool if r.revert_date <= as_of and r.id not in acked),
            key=lambda r: (r.revert_date, r.id),
        )
        assert due_reverts(pool, acked, as_of) == expected


# ---------------------------------------------------------------- helpers


def test_week_helpers():
    assert monday_of(date(2022, 9, 8)) == MONDAY
    assert sunday_of(date(2022, 9, 8)) == date(2022, 9, 11)
    assert occurrence_in_week(Day.THU, date(2022, 9, 8)) == date(2022, 9, 8)
    assert occurrence_in_week(Day.MON, date(2022, 9, 11)) == MONDAY


def test_patch_window_validation():
    with pytest.raises(ValueError, match="inverted"):
        SchedulePatch("r", MONDAY, MONDAY - timedelta(days=1))


# ------------------------------------------------- random operation fuzz


def test_random_operation_sequences_preserve_safety():
    """Drive the request lifecycle with random (often invalid) operations.

    Invariants: state only moves along the legal edges, failed calls leave
    the request unchanged, and every resolved patch yields a verifiably
    clean effective schedule.
    """
    legal = {
        (RequestState.SUBMITTED, RequestState.CLAIMED),
        (RequestState.SUBMITTED, RequestState.ESCALATED),
        (RequestState.CLAIMED, RequestState.ESCALATED),
        (RequestState.CLAIMED, RequestState.RESOLVED),
    }
    roster, shifts, schedule = _fixture()
    by_ta = schedule.by_ta()
    rng = random.Random(20220905)

    for trial in range(300):
        requester = rng.choice([ta.id for ta in roster])
        owned = by_ta.get(requester, [])
        if not owned:
            continue
        shift_id = rng.choice(owned)
        shift = next(s for s in shifts if s.id == shift_id)
        occurrence = occurrence_in_week(shift.slot.day, MONDAY)
        duration = rng.choice([OneOff(), Until(end=occurrence + timedelta(days=7 * rng.randrange(1, 5)))])
        try:
            req = submit_request(
                f"q{trial}", requester, shift_id, occurrence, duration, "fuzz",
                schedule, shifts, today=TODAY, now=NOW,
            )
        except OccurrenceMismatch:
            continue

        for _ in range(rng.randrange(1, 6)):
            before = req.state
            op = rng.randrange(3)
            try:
                if op == 0:
                    req = auto_claim(req, DUTY)
                elif op == 1:
                    resolution = rng.choice([
                        Cancelled(),
                        ModalityChange(),
                        Replacement(substitute=rng.choice([ta.id for ta in roster])),
                        PeerSwap(
                            counterparty=rng.choice([ta.id for ta in roster]),
                            counterparty_shift_id=rng.choice([s.id for s in shifts]),
                        ),
                    ])
                    outcome = resolve(req, resolution, schedule, roster, shifts)
                    req = outcome.request
                    assert check_schedule(outcome.schedule, roster, shifts) == []
                else:
                    req = escalate(req, datetime(2022, 9, 4, 23, 0), shifts)
            except (WrongState, InvalidResolution, NoOwner):
                assert req.state is before  # failed ops must not mutate
                continue
            if req.state is not before:
                assert (before, req.state) in legal, f"illegal {before} -> {req.state}"
