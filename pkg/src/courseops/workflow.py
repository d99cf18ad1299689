"""Live rescheduling workflow: swap requests, weekday-owner claiming,
resolutions, escalation, and scheduled reverts.

Requests are immutable snapshots; every operation returns a new request (and,
for resolve, a schedule patch).  The weekly template schedule itself is never
edited: resolutions produce dated patches that overlay the template for a
window of calendar days, and reverts simply retire the patch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta
from typing import Iterable, Mapping, Sequence

from .model import (
    Assignment,
    Day,
    Modality,
    Schedule,
    Shift,
    TeachingAssistant,
    UnknownIdError,
    WEEKDAYS,
    check_schedule,
    index_by_id,
)
from .solver import find_replacement_candidates

DEFAULT_ESCALATION_LEAD_HOURS = 24


class WorkflowError(Exception):
    pass


class NotAssigned(WorkflowError):
    pass


class PastDate(WorkflowError):
    pass


class WrongState(WorkflowError):
    pass


class NoOwner(WorkflowError):
    pass


class InvalidResolution(WorkflowError):
    """Resolution rejected; the message names the violated predicate."""


class OccurrenceMismatch(WorkflowError):
    """The occurrence date does not land on the shift's weekday, or the
    change window is inverted."""


class RequestState(enum.Enum):
    SUBMITTED = "Submitted"
    CLAIMED = "Claimed"
    RESOLVED = "Resolved"
    ESCALATED = "Escalated"


@dataclass(frozen=True)
class OneOff:
    pass


@dataclass(frozen=True)
class Until:
    end: date


@dataclass(frozen=True)
class PeerSwap:
    """Bilateral exchange: the counterparty covers the requester's shift and
    the requester covers ``counterparty_shift_id`` for the same window."""

    counterparty: str
    counterparty_shift_id: str


@dataclass(frozen=True)
class Replacement:
    substitute: str


@dataclass(frozen=True)
class ModalityChange:
    """Shift runs online for the window instead of in person."""


@dataclass(frozen=True)
class Cancelled:
    pass


Resolution = PeerSwap | Replacement | ModalityChange | Cancelled
ChangeDuration = OneOff | Until


@dataclass(frozen=True)
class SwapRequest:
    id: str
    requester: str
    shift_id: str
    occurrence_date: date
    duration_of_change: ChangeDuration
    reason: str
    state: RequestState
    created_at: datetime
    claimed_by: str | None = None
    resolution: Resolution | None = None
    revert_date: date | None = None

    def __post_init__(self) -> None:
        if self.state is RequestState.RESOLVED and self.resolution is None:
            raise ValueError(f"request {self.id}: Resolved without a resolution")
        if (
            isinstance(self.duration_of_change, Until)
            and self.state is RequestState.RESOLVED
            and self.revert_date != self.duration_of_change.end
        ):
            raise ValueError(f"request {self.id}: revert_date must equal the Until date")


@dataclass(frozen=True)
class DutyRoster:
    """Weekday -> scheduling-team TA responsible for claiming that day's
    requests.  Total over Mon-Fri; weekends intentionally have no owner."""

    owners: Mapping[Day, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "owners", dict(self.owners))
        missing = [d.short for d in WEEKDAYS if d not in self.owners]
        if missing:
            raise ValueError(f"duty roster missing weekdays: {', '.join(missing)}")

    def owner_for(self, d: date) -> str | None:
        return self.owners.get(Day.of(d))


@dataclass(frozen=True)
class SchedulePatch:
    """A dated overlay on the weekly template.

    Active on calendar days d with window_start <= d <= window_end; on active
    days the drops are removed from, and the adds added to, that day's
    staffing.  ``online_shift_ids`` run online while the patch is active.
    """

    request_id: str
    window_start: date
    window_end: date
    drops: tuple[Assignment, ...] = ()
    adds: tuple[Assignment, ...] = ()
    online_shift_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.window_end < self.window_start:
            raise ValueError("patch window is inverted")

    def active_on(self, d: date) -> bool:
        return self.window_start <= d <= self.window_end


@dataclass(frozen=True)
class ResolveOutcome:
    request: SwapRequest
    schedule: Schedule
    patch: SchedulePatch


def monday_of(d: date) -> date:
    return d - timedelta(days=d.weekday())


def sunday_of(d: date) -> date:
    return monday_of(d) + timedelta(days=6)


def occurrence_in_week(day: Day, week_of: date) -> date:
    return monday_of(week_of) + timedelta(days=day.value)


# ---------------------------------------------------------------------------
# effective (patched) views of the weekly template


def effective_assignments(
    template: Schedule,
    shifts: Sequence[Shift],
    patches: Iterable[SchedulePatch],
    week_of: date,
) -> Schedule:
    """The weekly template with every patch active that week applied, per
    shift occurrence date."""
    shift_map = index_by_id(shifts, "shift")
    monday = monday_of(week_of)
    staffing: set[Assignment] = set(template.assignments)
    for patch in patches:
        for a in patch.drops:
            occur = monday + timedelta(days=shift_map[a.shift_id].slot.day.value)
            if patch.active_on(occur):
                staffing.discard(a)
        for a in patch.adds:
            occur = monday + timedelta(days=shift_map[a.shift_id].slot.day.value)
            if patch.active_on(occur):
                staffing.add(a)
    return Schedule(frozenset(staffing), monday)


def effective_shifts(
    shifts: Sequence[Shift],
    patches: Iterable[SchedulePatch],
    week_of: date,
) -> list[Shift]:
    """Shifts with modality overrides applied for the given week."""
    monday = monday_of(week_of)
    online: list[tuple[str, date, date]] = []
    for patch in patches:
        for sid in patch.online_shift_ids:
            online.append((sid, patch.window_start, patch.window_end))
    out = []
    for s in shifts:
        occur = monday + timedelta(days=s.slot.day.value)
        flipped = any(
            sid == s.id and start <= occur <= end for sid, start, end in online
        )
        if flipped and s.modality is Modality.IN_PERSON:
            out.append(replace(s, modality=Modality.ONLINE))
        else:
            out.append(s)
    return out


# ---------------------------------------------------------------------------
# operations


def submit_request(
    request_id: str,
    requester: str,
    shift_id: str,
    occurrence_date: date,
    duration: ChangeDuration,
    reason: str,
    schedule: Schedule,
    shifts: Sequence[Shift],
    *,
    today: date,
    now: datetime,
) -> SwapRequest:
    shift_map = index_by_id(shifts, "shift")
    if shift_id not in shift_map:
        raise UnknownIdError(f"unknown shift {shift_id!r}")
    if Assignment(requester, shift_id) not in schedule.assignments:
        raise NotAssigned(f"{requester} is not assigned to {shift_id}")
    if occurrence_date < today:
        raise PastDate(f"occurrence {occurrence_date} is in the past")
    if Day.of(occurrence_date) != shift_map[shift_id].slot.day:
        raise OccurrenceMismatch(
            f"{occurrence_date} is a {Day.of(occurrence_date).short}, "
            f"but {shift_id} runs on {shift_map[shift_id].slot.day.short}"
        )
    if isinstance(duration, Until) and duration.end < occurrence_date:
        raise OccurrenceMismatch("change window ends before it starts")
    return SwapRequest(
        id=request_id,
        requester=requester,
        shift_id=shift_id,
        occurrence_date=occurrence_date,
        duration_of_change=duration,
        reason=reason,
        state=RequestState.SUBMITTED,
        created_at=now,
    )


def auto_claim(request: SwapRequest, duty_roster: DutyRoster) -> SwapRequest:
    if request.state is not RequestState.SUBMITTED:
        raise WrongState(f"cannot claim a {request.state.value} request")
    owner = duty_roster.owner_for(request.occurrence_date)
    if owner is None:
        raise NoOwner(f"no duty owner on {Day.of(request.occurrence_date).short}")
    return replace(request, state=RequestState.CLAIMED, claimed_by=owner)


def _change_window(request: SwapRequest) -> tuple[date, date]:
    # Patches act on whole occurrence weeks; an Until change runs through its
    # end date inclusive.
    start = monday_of(request.occurrence_date)
    if isinstance(request.duration_of_change, Until):
        return start, request.duration_of_change.end
    return start, sunday_of(request.occurrence_date)


def resolve(
    request: SwapRequest,
    resolution: Resolution,
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
) -> ResolveOutcome:
    """Apply a resolution to a Claimed request.

    ``schedule``/``shifts`` must be the effective view for the occurrence
    week.  The patched schedule is re-checked in full; any violation rejects
    the resolution.
    """
    if request.state is not RequestState.CLAIMED:
        raise WrongState(f"cannot resolve a {request.state.value} request")
    shift_map = index_by_id(shifts, "shift")
    window_start, window_end = _change_window(request)
    dropped = Assignment(request.requester, request.shift_id)
    drops: tuple[Assignment, ...] = ()
    adds: tuple[Assignment, ...] = ()
    online: tuple[str, ...] = ()

    if isinstance(resolution, Replacement):
        candidates = find_replacement_candidates(
            schedule, roster, shifts, request.shift_id, excluded=(request.requester,)
        )
        if resolution.substitute not in candidates:
            raise InvalidResolution(
                f"substitute {resolution.substitute} is not an eligible replacement"
            )
        drops, adds = (dropped,), (Assignment(resolution.substitute, request.shift_id),)
    elif isinstance(resolution, PeerSwap):
        if resolution.counterparty == request.requester:
            raise InvalidResolution("counterparty equals requester")
        other = Assignment(resolution.counterparty, resolution.counterparty_shift_id)
        if other not in schedule.assignments:
            raise InvalidResolution(
                f"counterparty {resolution.counterparty} is not assigned to "
                f"{resolution.counterparty_shift_id}"
            )
        drops = (dropped, other)
        adds = (
            Assignment(resolution.counterparty, request.shift_id),
            Assignment(request.requester, resolution.counterparty_shift_id),
        )
    elif isinstance(resolution, ModalityChange):
        if shift_map[request.shift_id].modality is not Modality.IN_PERSON:
            raise InvalidResolution("already online")
        online = (request.shift_id,)
    elif isinstance(resolution, Cancelled):
        pass
    else:  # pragma: no cover - exhaustive over the union
        raise InvalidResolution(f"unknown resolution {resolution!r}")

    patch = SchedulePatch(
        request_id=request.id,
        window_start=window_start,
        window_end=window_end,
        drops=drops,
        adds=adds,
        online_shift_ids=online,
    )
    patched = effective_assignments(schedule, shifts, [patch], request.occurrence_date)
    problems = check_schedule(patched, roster, shifts)
    if problems:
        worst = problems[0]
        raise InvalidResolution(f"{worst.kind.value.lower()}: {worst.subject} {worst.detail}")

    revert = (
        request.duration_of_change.end
        if isinstance(request.duration_of_change, Until)
        else None
    )
    resolved = replace(
        request,
        state=RequestState.RESOLVED,
        resolution=resolution,
        revert_date=revert,
    )
    return ResolveOutcome(resolved, patched, patch)


def escalate(
    request: SwapRequest,
    now: datetime,
    shifts: Sequence[Shift],
    lead_hours: float = DEFAULT_ESCALATION_LEAD_HOURS,
) -> SwapRequest:
    """Escalate when the occurrence starts within the lead-time window.

    Comparison happens in course-local naive time; ``now`` must already be
    local.  Requests comfortably far out are returned unchanged.
    """
    if request.state not in (RequestState.SUBMITTED, RequestState.CLAIMED):
        raise WrongState(f"cannot escalate a {request.state.value} request")
    shift = index_by_id(shifts, "shift")[request.shift_id]
    start = datetime.combine(request.occurrence_date, _time_of(shift.slot.start_minute))
    if (start - now) < timedelta(hours=lead_hours):
        return replace(request, state=RequestState.ESCALATED)
    return request


def _time_of(minute_of_day: int):
    from datetime import time

    return time(minute_of_day // 60, minute_of_day % 60)


def due_reverts(
    requests: Iterable[SwapRequest],
    reverted_ids: Iterable[str],
    as_of: date,
) -> list[SwapRequest]:
    """Resolved Until-changes whose window has lapsed and which still await
    their revert, earliest (then lowest id) first."""
    done = set(reverted_ids)
    due = [
        r
        for r in requests
        if r.state is RequestState.RESOLVED
        and r.revert_date is not None
        and r.revert_date <= as_of
        and r.id not in done
    ]
    due.sort(key=lambda r: (r.revert_date, r.id))
    return due
