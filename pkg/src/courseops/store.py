"""Single-writer operational store.

Base data (roster, shifts, teams, the solved weekly template) comes from CSVs
in the data directory and is immutable at runtime.  Everything that changes
during the term lives here, guarded by one lock, persisted as events before
acknowledgment, and reconstructed on startup by snapshot + log replay.

Events carry result snapshots, not commands: validation happens exactly once,
on the live path, so replay is total and deterministic even if base files or
validation logic later change.
"""

from __future__ import annotations

import json
import threading
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Callable
from zoneinfo import ZoneInfo

from . import csvio, serde, workflow
from .attendance import (
    AttendancePolicy,
    evaluate_attendance,
    parse_session_log,
)
from .config import ServiceConfig
from .events import EventLog, read_snapshot, write_snapshot
from .loststudents import (
    ContactHistory,
    Deliverable,
    DetectionConfig,
    LostStudentCase,
    StudentRecord,
    conversion_stats,
    detect_onboarding,
    detect_proactive,
    ingest_lms_export,
    load_deliverables,
    mark_contacted,
    mark_meeting,
    close_case,
    record_report,
    triage,
)
from .model import (
    FunctionalArea,
    Schedule,
    Shift,
    Team,
    TeachingAssistant,
    UnknownIdError,
)
from .solver import DEFAULT_WEEK_ANCHOR, find_replacement_candidates
from .workflow import (
    DutyRoster,
    NoOwner,
    RequestState,
    Resolution,
    SchedulePatch,
    SwapRequest,
    effective_assignments,
    effective_shifts,
)


class UnknownRequest(UnknownIdError):
    pass


class UnknownCase(UnknownIdError):
    pass


class TermNotConfigured(ValueError):
    pass


class OpsStore:
    def __init__(
        self,
        data_dir: Path,
        config: ServiceConfig | None = None,
        clock: Callable[[], datetime] | None = None,
    ):
        self.config = config or ServiceConfig()
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._tz = ZoneInfo(self.config.timezone)
        self._lock = threading.RLock()

        self.roster: list[TeachingAssistant] = []
        self.shifts: list[Shift] = []
        self.teams: list[Team] = []
        self.template = Schedule(frozenset(), DEFAULT_WEEK_ANCHOR)
        self.duty_roster: DutyRoster | None = None
        self.deliverables: list[Deliverable] = []
        self.students: list[StudentRecord] = []
        self.term_start: date | None = None
        self.add_drop_date: date | None = None
        self.term_weeks: int = 14
        self._load_base_data()

        self.requests: dict[str, SwapRequest] = {}
        self.patches: dict[str, SchedulePatch] = {}
        self.reverted: set[str] = set()
        self.cases: dict[str, LostStudentCase] = {}
        self.history = ContactHistory()
        self.attendance: dict[str, dict] = {}
        self.idem: dict[str, str] = {}
        self._req_counter = 0
        self._case_counter = 0

        self.log = EventLog(self.data_dir / "events.log")
        self._recover()

    # -- clocks ---------------------------------------------------------------

    def now_utc(self) -> datetime:
        return self._clock()

    def local_now(self) -> datetime:
        return self.now_utc().astimezone(self._tz)

    def today(self) -> date:
        return self.local_now().date()

    # -- base data -------------------------------------------------------------

    def _load_base_data(self) -> None:
        d = self.data_dir
        if (d / "roster.csv").exists():
            self.roster = csvio.load_roster((d / "roster.csv").read_text())
        if (d / "shifts.csv").exists():
            self.shifts = csvio.load_shifts((d / "shifts.csv").read_text())
        if (d / "teams.csv").exists():
            self.teams = csvio.load_teams((d / "teams.csv").read_text())
        if (d / "schedule.csv").exists():
            self.template = csvio.load_schedule(
                (d / "schedule.csv").read_text(), DEFAULT_WEEK_ANCHOR
            )
        if (d / "duty_roster.json").exists():
            self.duty_roster = serde.decode_duty_roster(
                json.loads((d / "duty_roster.json").read_text())
            )
        if (d / "term.json").exists():
            doc = json.loads((d / "term.json").read_text())
            self.term_start = date.fromisoformat(doc["term_start"])
            self.add_drop_date = date.fromisoformat(doc["add_drop_date"])
            self.term_weeks = int(doc.get("term_weeks", 14))
        if (d / "deliverables.csv").exists():
            self.deliverables = load_deliverables((d / "deliverables.csv").read_text())
        if (d / "lms_export.csv").exists() and self.deliverables:
            result = ingest_lms_export(
                (d / "lms_export.csv").read_text(), self.deliverables
            )
            self.students = result.records

    def detection_config(self) -> DetectionConfig:
        if self.term_start is None or self.add_drop_date is None:
            raise TermNotConfigured("term.json with term_start/add_drop_date required")
        return DetectionConfig(
            term_start=self.term_start,
            add_drop_date=self.add_drop_date,
            cooldown_days=self.config.cooldown_days,
        )

    # -- recovery ---------------------------------------------------------------

    def _recover(self) -> None:
        records = self.log.read_all()  # full-file verification every startup
        snap = read_snapshot(self.data_dir / "snapshot.json")
        start_after = 0
        if snap is not None:
            start_after, state = snap
            self._restore_state(state)
        for record in records:
            if record.seq > start_after:
                self._apply(record.kind, record.payload, record.idem_key)

    def snapshot(self) -> None:
        with self._lock:
            write_snapshot(
                self.data_dir / "snapshot.json", self.log.last_seq, self._encode_state()
            )

    def _encode_state(self) -> dict:
        return {
            "requests": {k: serde.encode_request(v) for k, v in self.requests.items()},
            "patches": {k: serde.encode_patch(v) for k, v in self.patches.items()},
            "reverted": sorted(self.reverted),
            "cases": {k: serde.encode_case(v) for k, v in self.cases.items()},
            "last_contact": {
                k: v.isoformat() for k, v in self.history.last_contact.items()
            },
            "cursors": dict(self.history.cursors),
            "attendance": self.attendance,
            "idem": dict(self.idem),
            "req_counter": self._req_counter,
            "case_counter": self._case_counter,
        }

    def _restore_state(self, state: dict) -> None:
        self.requests = {k: serde.decode_request(v) for k, v in state["requests"].items()}
        self.patches = {k: serde.decode_patch(v) for k, v in state["patches"].items()}
        self.reverted = set(state["reverted"])
        self.cases = {k: serde.decode_case(v) for k, v in state["cases"].items()}
        self.history = ContactHistory(
            {k: date.fromisoformat(v) for k, v in state["last_contact"].items()},
            state["cursors"],
        )
        self.attendance = state["attendance"]
        self.idem = dict(state["idem"])
        self._req_counter = state["req_counter"]
        self._case_counter = state["case_counter"]

    # -- event application (shared by live path and replay) -----------------------

    def _apply(self, kind: str, payload: dict, idem_key: str | None = None) -> None:
        if kind in ("RequestSubmitted", "RequestClaimed", "RequestEscalated"):
            request = serde.decode_request(payload["request"])
            self.requests[request.id] = request
            self._bump_req_counter(request.id)
        elif kind == "RequestResolved":
            request = serde.decode_request(payload["request"])
            self.requests[request.id] = request
            patch = serde.decode_patch(payload["patch"])
            self.patches[patch.request_id] = patch
        elif kind == "RevertApplied":
            self.reverted.add(payload["request_id"])
        elif kind == "CasesDetected":
            for doc in payload["cases"]:
                case = serde.decode_case(doc)
                self.cases.setdefault(case.id, case)
        elif kind == "CaseReported":
            case = serde.decode_case(payload["case"])
            self.cases[case.id] = case
            self._bump_case_counter(case.id)
        elif kind == "CaseTriaged":
            case = serde.decode_case(payload["case"])
            self.cases[case.id] = case
            self.history.cursors.update(payload["cursors"])
        elif kind in ("CaseContacted", "CaseMeetingHeld", "CaseClosed"):
            case = serde.decode_case(payload["case"])
            self.cases[case.id] = case
            for student, iso in payload.get("last_contact", {}).items():
                self.history.record_contact(student, date.fromisoformat(iso))
        elif kind == "AttendanceEvaluated":
            self.attendance[payload["week"]] = {
                "flags": payload["flags"],
                "notes": payload["notes"],
            }
        else:
            raise ValueError(f"unknown event kind {kind!r}")
        if idem_key is not None:
            self.idem[idem_key] = payload.get("entity_id", "")

    def _bump_req_counter(self, request_id: str) -> None:
        try:
            n = int(request_id.rsplit("-", 1)[1])
        except (IndexError, ValueError):
            return
        self._req_counter = max(self._req_counter, n)

    def _bump_case_counter(self, case_id: str) -> None:
        try:
            n = int(case_id.rsplit("-", 1)[1])
        except (IndexError, ValueError):
            return
        self._case_counter = max(self._case_counter, n)

    def _commit(self, kind: str, payload: dict, idem_key: str | None = None) -> None:
        self.log.append(kind, payload, idem_key=idem_key, ts=self.now_utc())
        self._apply(kind, payload, idem_key)

    # -- effective views -----------------------------------------------------------

    def active_patches(self) -> list[SchedulePatch]:
        return [p for rid, p in sorted(self.patches.items()) if rid not in self.reverted]

    def schedule_for_week(self, week_of: date) -> Schedule:
        return effective_assignments(
            self.template, self.shifts, self.active_patches(), week_of
        )

    def shifts_for_week(self, week_of: date) -> list[Shift]:
        return effective_shifts(self.shifts, self.active_patches(), week_of)

    # -- swap-request commands --------------------------------------------------------

    def submit_request(
        self,
        requester: str,
        shift_id: str,
        occurrence_date: date,
        duration: workflow.ChangeDuration,
        reason: str,
        idem_key: str | None = None,
    ) -> SwapRequest:
        with self._lock:
            if idem_key is not None and idem_key in self.idem:
                return self.requests[self.idem[idem_key]]
            request = workflow.submit_request(
                f"req-{self._req_counter + 1:04d}",
                requester,
                shift_id,
                occurrence_date,
                duration,
                reason,
                self.schedule_for_week(occurrence_date),
                self.shifts_for_week(occurrence_date),
                today=self.today(),
                now=self.now_utc(),
            )
            payload = {"request": serde.encode_request(request), "entity_id": request.id}
            self._commit("RequestSubmitted", payload, idem_key)
            return request

    def _get_request(self, request_id: str) -> SwapRequest:
        try:
            return self.requests[request_id]
        except KeyError:
            raise UnknownRequest(f"unknown request {request_id!r}") from None

    def claim_request(self, request_id: str) -> SwapRequest:
        with self._lock:
            request = self._get_request(request_id)
            if self.duty_roster is None:
                raise NoOwner("no duty roster configured")
            claimed = workflow.auto_claim(request, self.duty_roster)
            self._commit(
                "RequestClaimed",
                {"request": serde.encode_request(claimed), "entity_id": claimed.id},
            )
            return claimed

    def resolve_request(
        self, request_id: str, resolution: Resolution, idem_key: str | None = None
    ) -> SwapRequest:
        with self._lock:
            if idem_key is not None and idem_key in self.idem:
                return self.requests[self.idem[idem_key]]
            request = self._get_request(request_id)
            week = request.occurrence_date
            outcome = workflow.resolve(
                request,
                resolution,
                self.schedule_for_week(week),
                self.roster,
                self.shifts_for_week(week),
            )
            payload = {
                "request": serde.encode_request(outcome.request),
                "patch": serde.encode_patch(outcome.patch),
                "entity_id": outcome.request.id,
            }
            self._commit("RequestResolved", payload, idem_key)
            return outcome.request

    def escalate_request(self, request_id: str) -> SwapRequest:
        with self._lock:
            request = self._get_request(request_id)
            after = workflow.escalate(
                request,
                self.local_now().replace(tzinfo=None),
                self.shifts,
                self.config.escalation_lead_hours,
            )
            if after.state is request.state:
                return after
            self._commit(
                "RequestEscalated",
                {"request": serde.encode_request(after), "entity_id": after.id},
            )
            return after

    def ack_revert(self, request_id: str) -> SwapRequest:
        with self._lock:
            request = self._get_request(request_id)
            if request.state is not RequestState.RESOLVED or request.revert_date is None:
                raise workflow.WrongState(f"request {request_id} has no pending revert")
            if request_id not in self.reverted:
                self._commit("RevertApplied", {"request_id": request_id})
            return request

    def due_reverts(self, as_of: date | None = None) -> list[SwapRequest]:
        with self._lock:
            return workflow.due_reverts(
                self.requests.values(), self.reverted, as_of or self.today()
            )

    def requests_by_state(self, state: RequestState | None = None) -> list[SwapRequest]:
        with self._lock:
            out = [
                r
                for r in self.requests.values()
                if state is None or r.state is state
            ]
            out.sort(key=lambda r: (r.occurrence_date, r.id))
            return out

    def candidates_for(self, request_id: str) -> list[str]:
        with self._lock:
            request = self._get_request(request_id)
            week = request.occurrence_date
            return find_replacement_candidates(
                self.schedule_for_week(week),
                self.roster,
                self.shifts_for_week(week),
                request.shift_id,
                excluded=(request.requester,),
            )

    # -- lost-student commands -----------------------------------------------------

    def detect_cases(self, phase: str, as_of: date) -> list[LostStudentCase]:
        with self._lock:
            config = self.detection_config()
            if phase == "onboarding":
                found = detect_onboarding(self.students, config, as_of)
            elif phase == "proactive":
                found = detect_proactive(self.students, config, as_of)
            else:
                raise ValueError(f"unknown phase {phase!r}")
            fresh = [c for c in found if c.id not in self.cases]
            if fresh:
                self._commit(
                    "CasesDetected", {"cases": [serde.encode_case(c) for c in fresh]}
                )
            return fresh

    def _get_case(self, case_id: str) -> LostStudentCase:
        try:
            return self.cases[case_id]
        except KeyError:
            raise UnknownCase(f"unknown case {case_id!r}") from None

    def report_case(
        self, student_id: str, reporter: str, idem_key: str | None = None
    ) -> LostStudentCase:
        with self._lock:
            if idem_key is not None and idem_key in self.idem:
                return self.cases[self.idem[idem_key]]
            case = record_report(
                self.cases.values(),
                (s.student_id for s in self.students),
                student_id,
                reporter,
                f"case-{self._case_counter + 1:04d}",
            )
            if case.id in self.cases:  # idempotent duplicate report
                return case
            self._commit(
                "CaseReported",
                {"case": serde.encode_case(case), "entity_id": case.id},
                idem_key,
            )
            return case

    def triage_case(self, case_id: str, as_of: date | None = None) -> LostStudentCase:
        with self._lock:
            case = self._get_case(case_id)
            team = self._lost_student_team()
            after = triage(
                case, self.history, team, self.detection_config(), as_of or self.today()
            )
            self._commit(
                "CaseTriaged",
                {
                    "case": serde.encode_case(after),
                    "cursors": dict(self.history.cursors),
                    "entity_id": after.id,
                },
            )
            return after

    def _lost_student_team(self) -> Team:
        for team in self.teams:
            if team.functional_area is FunctionalArea.LOST_STUDENT:
                return team
        raise ValueError("no lost-student team in teams.csv")

    def case_contacted(self, case_id: str, on: date, note: str = "") -> LostStudentCase:
        with self._lock:
            after = mark_contacted(self._get_case(case_id), on, note)
            self.history.record_contact(after.student_id, on)
            self._commit(
                "CaseContacted",
                {
                    "case": serde.encode_case(after),
                    "last_contact": {after.student_id: on.isoformat()},
                    "entity_id": after.id,
                },
            )
            return after

    def case_meeting(self, case_id: str, on: date) -> LostStudentCase:
        with self._lock:
            after = mark_meeting(self._get_case(case_id), on)
            self._commit(
                "CaseMeetingHeld",
                {"case": serde.encode_case(after), "entity_id": after.id},
            )
            return after

    def case_close(self, case_id: str, on: date, note: str = "") -> LostStudentCase:
        with self._lock:
            after = close_case(self._get_case(case_id), on, note)
            self._commit(
                "CaseClosed", {"case": serde.encode_case(after), "entity_id": after.id}
            )
            return after

    def lost_queue(self) -> list[LostStudentCase]:
        with self._lock:
            out = [c for c in self.cases.values() if c.open]
            out.sort(key=lambda c: c.id)
            return out

    def stats(self):
        with self._lock:
            return conversion_stats(self.cases.values())

    # -- attendance ------------------------------------------------------------------

    def evaluate_attendance_log(self, week_of: date, csv_text: str) -> dict:
        with self._lock:
            parsed = parse_session_log(csv_text)
            policy = AttendancePolicy(
                late_threshold_min=self.config.late_threshold_min,
                early_leave_threshold_min=self.config.early_leave_threshold_min,
            )
            report = evaluate_attendance(
                parsed.entries,
                self.schedule_for_week(week_of),
                self.roster,
                self.shifts_for_week(week_of),
                policy,
                week_of=week_of,
            )
            doc = {
                "week": week_of.isoformat(),
                "flags": [serde.encode_flag(f) for f in report.flags],
                "notes": [serde.encode_note(n) for n in report.notes],
            }
            self._commit("AttendanceEvaluated", doc)
            return doc

    def attendance_for(self, week_of: date) -> dict:
        with self._lock:
            return self.attendance.get(
                week_of.isoformat(), {"flags": [], "notes": []}
            )
