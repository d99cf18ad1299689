"""JSON encoding/decoding for the domain types that cross the event log and
the HTTP API.

Every encoder has a matching decoder and round-trips exactly; tests rely on
that to prove replay determinism.  Tagged unions use a "kind" discriminator.
"""

from __future__ import annotations

from datetime import date, datetime

from .attendance import AttendanceFlag, AttendanceNote, FlagKind
from .loststudents import (
    CaseState,
    DeliverableKind,
    LateJoin,
    LostStudentCase,
    NoDiscord,
    NoLmsAccess,
    ProactiveRule,
    Reported,
    Trigger,
)
from .model import Assignment, Day, Schedule
from .workflow import (
    Cancelled,
    ChangeDuration,
    DutyRoster,
    ModalityChange,
    OneOff,
    PeerSwap,
    Replacement,
    RequestState,
    Resolution,
    SchedulePatch,
    SwapRequest,
    Until,
)


def _opt(value, fn):
    return None if value is None else fn(value)


# -- workflow -----------------------------------------------------------------


def encode_duration(d: ChangeDuration) -> dict:
    if isinstance(d, Until):
        return {"kind": "Until", "end": d.end.isoformat()}
    return {"kind": "OneOff"}


def decode_duration(doc: dict) -> ChangeDuration:
    if doc["kind"] == "Until":
        return Until(date.fromisoformat(doc["end"]))
    if doc["kind"] == "OneOff":
        return OneOff()
    raise ValueError(f"unknown duration kind {doc['kind']!r}")


def encode_resolution(r: Resolution) -> dict:
    if isinstance(r, PeerSwap):
        return {
            "kind": "PeerSwap",
            "counterparty": r.counterparty,
            "counterparty_shift_id": r.counterparty_shift_id,
        }
    if isinstance(r, Replacement):
        return {"kind": "Replacement", "substitute": r.substitute}
    if isinstance(r, ModalityChange):
        return {"kind": "ModalityChange"}
    if isinstance(r, Cancelled):
        return {"kind": "Cancelled"}
    raise ValueError(f"unknown resolution {r!r}")


def decode_resolution(doc: dict) -> Resolution:
    kind = doc.get("kind")
    if kind == "PeerSwap":
        return PeerSwap(doc["counterparty"], doc["counterparty_shift_id"])
    if kind == "Replacement":
        return Replacement(doc["substitute"])
    if kind == "ModalityChange":
        return ModalityChange()
    if kind == "Cancelled":
        return Cancelled()
    raise ValueError(f"unknown resolution kind {kind!r}")


def encode_request(r: SwapRequest) -> dict:
    return {
        "id": r.id,
        "requester": r.requester,
        "shift_id": r.shift_id,
        "occurrence_date": r.occurrence_date.isoformat(),
        "duration_of_change": encode_duration(r.duration_of_change),
        "reason": r.reason,
        "state": r.state.value,
        "created_at": r.created_at.isoformat(),
        "claimed_by": r.claimed_by,
        "resolution": _opt(r.resolution, encode_resolution),
        "revert_date": _opt(r.revert_date, date.isoformat),
    }


def decode_request(doc: dict) -> SwapRequest:
    return SwapRequest(
        id=doc["id"],
        requester=doc["requester"],
        shift_id=doc["shift_id"],
        occurrence_date=date.fromisoformat(doc["occurrence_date"]),
        duration_of_change=decode_duration(doc["duration_of_change"]),
        reason=doc["reason"],
        state=RequestState(doc["state"]),
        created_at=datetime.fromisoformat(doc["created_at"]),
        claimed_by=doc.get("claimed_by"),
        resolution=_opt(doc.get("resolution"), decode_resolution),
        revert_date=_opt(doc.get("revert_date"), date.fromisoformat),
    )


def encode_patch(p: SchedulePatch) -> dict:
    return {
        "request_id": p.request_id,
        "window_start": p.window_start.isoformat(),
        "window_end": p.window_end.isoformat(),
        "drops": [[a.ta_id, a.shift_id] for a in p.drops],
        "adds": [[a.ta_id, a.shift_id] for a in p.adds],
        "online_shift_ids": list(p.online_shift_ids),
    }


def decode_patch(doc: dict) -> SchedulePatch:
    return SchedulePatch(
        request_id=doc["request_id"],
        window_start=date.fromisoformat(doc["window_start"]),
        window_end=date.fromisoformat(doc["window_end"]),
        drops=tuple(Assignment(t, s) for t, s in doc["drops"]),
        adds=tuple(Assignment(t, s) for t, s in doc["adds"]),
        online_shift_ids=tuple(doc["online_shift_ids"]),
    )


def encode_duty_roster(r: DutyRoster) -> dict:
    return {day.short: ta for day, ta in sorted(r.owners.items())}


def decode_duty_roster(doc: dict) -> DutyRoster:
    return DutyRoster({Day.parse(k): v for k, v in doc.items()})


# -- lost students -------------------------------------------------------------


def encode_trigger(t: Trigger) -> dict:
    if isinstance(t, LateJoin):
        return {"kind": "LateJoin"}
    if isinstance(t, NoLmsAccess):
        return {"kind": "NoLmsAccess"}
    if isinstance(t, NoDiscord):
        return {"kind": "NoDiscord"}
    if isinstance(t, ProactiveRule):
        return {"kind": "ProactiveRule", "deliverable": t.kind.value}
    if isinstance(t, Reported):
        return {"kind": "Reported", "by": t.by}
    raise ValueError(f"unknown trigger {t!r}")


def decode_trigger(doc: dict) -> Trigger:
    kind = doc.get("kind")
    if kind == "LateJoin":
        return LateJoin()
    if kind == "NoLmsAccess":
        return NoLmsAccess()
    if kind == "NoDiscord":
        return NoDiscord()
    if kind == "ProactiveRule":
        return ProactiveRule(DeliverableKind(doc["deliverable"]))
    if kind == "Reported":
        return Reported(doc["by"])
    raise ValueError(f"unknown trigger kind {kind!r}")


def encode_case(c: LostStudentCase) -> dict:
    return {
        "id": c.id,
        "student_id": c.student_id,
        "trigger": encode_trigger(c.trigger),
        "state": c.state.value,
        "assigned_to": c.assigned_to,
        "contacted_on": _opt(c.contacted_on, date.isoformat),
        "meeting_on": _opt(c.meeting_on, date.isoformat),
        "closed_on": _opt(c.closed_on, date.isoformat),
        "notes": list(c.notes),
    }


def decode_case(doc: dict) -> LostStudentCase:
    return LostStudentCase(
        id=doc["id"],
        student_id=doc["student_id"],
        trigger=decode_trigger(doc["trigger"]),
        state=CaseState(doc["state"]),
        assigned_to=doc.get("assigned_to"),
        contacted_on=_opt(doc.get("contacted_on"), date.fromisoformat),
        meeting_on=_opt(doc.get("meeting_on"), date.fromisoformat),
        closed_on=_opt(doc.get("closed_on"), date.fromisoformat),
        notes=tuple(doc.get("notes", [])),
    )


# -- attendance ------------------------------------------------------------------


def encode_flag(f: AttendanceFlag) -> dict:
    return {
        "ta_id": f.ta_id,
        "shift_id": f.shift_id,
        "occurrence_date": f.occurrence_date.isoformat(),
        "kind": f.kind.value,
        "minutes": f.minutes,
    }


def decode_flag(doc: dict) -> AttendanceFlag:
    return AttendanceFlag(
        ta_id=doc["ta_id"],
        shift_id=doc["shift_id"],
        occurrence_date=date.fromisoformat(doc["occurrence_date"]),
        kind=FlagKind(doc["kind"]),
        minutes=doc.get("minutes"),
    )


def encode_note(n: AttendanceNote) -> dict:
    return {"kind": n.kind, "subject": n.subject, "detail": n.detail}


def decode_note(doc: dict) -> AttendanceNote:
    return AttendanceNote(doc["kind"], doc["subject"], doc["detail"])


# -- schedule --------------------------------------------------------------------


def encode_schedule(s: Schedule) -> dict:
    return {
        "week_anchor": s.week_anchor.isoformat(),
        "assignments": [[a.ta_id, a.shift_id] for a in s.sorted_assignments()],
    }


def decode_schedule(doc: dict) -> Schedule:
    return Schedule.of(
        [(t, s) for t, s in doc["assignments"]],
        date.fromisoformat(doc["week_anchor"]),
    )
