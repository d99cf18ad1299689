"""HTTP/JSON service over the operational store.

Thin layer: parse, delegate, encode.  All domain decisions live in the
workflow/pipeline modules; all state transitions pass through the store's
single writer lock.  Errors map by type: unknown ids to 404, state conflicts
to 409, everything else client-side to 400.
"""

from __future__ import annotations

import errno
from contextlib import asynccontextmanager
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import serde
from .attendance import EmptyInput
from .config import ServiceConfig
from .ics import UnknownTA, export_ics
from .loststudents import IllegalTransition, SchemaError, UnknownStudent
from .model import Shift, UnknownIdError
from .planner import plan_org
from .store import OpsStore, TermNotConfigured
from .workflow import (
    InvalidResolution,
    NoOwner,
    NotAssigned,
    OccurrenceMismatch,
    PastDate,
    RequestState,
    WrongState,
    monday_of,
)

_NOT_FOUND = (UnknownIdError, UnknownTA, UnknownStudent)
_CONFLICT = (WrongState, InvalidResolution, IllegalTransition, NoOwner)
_BAD_REQUEST = (
    NotAssigned,
    PastDate,
    OccurrenceMismatch,
    EmptyInput,
    SchemaError,
    TermNotConfigured,
    ValueError,
)


class DurationBody(BaseModel):
    kind: str  # OneOff | Until
    end: date | None = None


class SubmitBody(BaseModel):
    requester: str
    shift_id: str
    occurrence_date: date
    duration: DurationBody = DurationBody(kind="OneOff")
    reason: str = ""
    idempotency_key: str | None = None


class ResolveBody(BaseModel):
    resolution: dict
    idempotency_key: str | None = None


class ReportBody(BaseModel):
    student_id: str
    reporter: str
    idempotency_key: str | None = None


class TriageBody(BaseModel):
    as_of: date | None = None


class ProgressBody(BaseModel):
    on: date
    note: str = ""


class DetectBody(BaseModel):
    phase: str
    as_of: date


class EvaluateBody(BaseModel):
    week: date
    log_csv: str


def encode_shift(s: Shift) -> dict:
    return {
        "id": s.id,
        "kind": s.kind.value,
        "day": s.slot.day.short,
        "start_minute": s.slot.start_minute,
        "duration_min": s.slot.duration_min,
        "modality": s.modality.value,
        "required_staff": s.required_staff,
        "section_ref": s.section_ref,
        "label": s.slot.label(),
    }


def create_app(store: OpsStore, ui_dir: Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.snapshot()

    app = FastAPI(title="courseops", docs_url=None, redoc_url=None, lifespan=lifespan)

    @app.exception_handler(Exception)
    async def on_error(request: Request, exc: Exception):
        if isinstance(exc, _NOT_FOUND):
            status = 404
        elif isinstance(exc, _CONFLICT):
            status = 409
        elif isinstance(exc, _BAD_REQUEST):
            status = 400
        else:
            raise exc
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "seq": store.log.last_seq,
            "tas": len(store.roster),
            "shifts": len(store.shifts),
        }

    @app.get("/api/org-plan")
    def org_plan(students: int = Query(ge=1)):
        plan = plan_org(students)
        return {
            "students": plan.students,
            "ta_count": plan.ta_count,
            "functional_ta_count": plan.functional_ta_count,
            "regular_ta_count": plan.regular_ta_count,
            "regular_team_count": plan.regular_team_count,
            "instructor_count": plan.instructor_count,
            "needs_extra_layer": plan.needs_extra_layer,
        }

    @app.get("/api/schedule")
    def schedule(week: date):
        monday = monday_of(week)
        effective = store.schedule_for_week(monday)
        shifts = store.shifts_for_week(monday)
        staffed = effective.by_shift()
        return {
            "week": monday.isoformat(),
            "assignments": [
                [a.ta_id, a.shift_id] for a in effective.sorted_assignments()
            ],
            "shifts": [encode_shift(s) for s in shifts],
            "coverage": [
                {
                    "shift_id": s.id,
                    "required": s.required_staff,
                    "assigned": len(staffed.get(s.id, [])),
                    "tas": staffed.get(s.id, []),
                }
                for s in shifts
            ],
        }

    @app.get("/api/duty-roster")
    def duty_roster():
        if store.duty_roster is None:
            return {}
        return serde.encode_duty_roster(store.duty_roster)

    # -- swap requests ----------------------------------------------------------

    @app.get("/api/swap-requests")
    def list_requests(state: str | None = None):
        parsed = RequestState(state) if state else None
        return [serde.encode_request(r) for r in store.requests_by_state(parsed)]

    @app.post("/api/swap-requests", status_code=201)
    def submit(body: SubmitBody):
        duration = serde.decode_duration(
            body.duration.model_dump(mode="json", exclude_none=True)
        )
        request = store.submit_request(
            body.requester,
            body.shift_id,
            body.occurrence_date,
            duration,
            body.reason,
            idem_key=body.idempotency_key,
        )
        return serde.encode_request(request)

    @app.get("/api/swap-requests/{request_id}")
    def get_request(request_id: str):
        return serde.encode_request(store._get_request(request_id))

    @app.post("/api/swap-requests/{request_id}/claim")
    def claim(request_id: str):
        return serde.encode_request(store.claim_request(request_id))

    @app.post("/api/swap-requests/{request_id}/resolve")
    def resolve(request_id: str, body: ResolveBody):
        resolution = serde.decode_resolution(body.resolution)
        request = store.resolve_request(
            request_id, resolution, idem_key=body.idempotency_key
        )
        return serde.encode_request(request)

    @app.post("/api/swap-requests/{request_id}/escalate")
    def escalate(request_id: str):
        return serde.encode_request(store.escalate_request(request_id))

    @app.get("/api/swap-requests/{request_id}/candidates")
    def candidates(request_id: str):
        return {"candidates": store.candidates_for(request_id)}

    @app.get("/api/due-reverts")
    def due_reverts(as_of: date | None = None):
        return [serde.encode_request(r) for r in store.due_reverts(as_of)]

    @app.post("/api/swap-requests/{request_id}/revert")
    def revert(request_id: str):
        return serde.encode_request(store.ack_revert(request_id))

    # -- lost students -----------------------------------------------------------

    @app.get("/api/lost-students/queue")
    def lost_queue():
        return [serde.encode_case(c) for c in store.lost_queue()]

    @app.post("/api/lost-students/detect")
    def detect(body: DetectBody):
        found = store.detect_cases(body.phase, body.as_of)
        return {"new_cases": [serde.encode_case(c) for c in found]}

    @app.post("/api/lost-students/report", status_code=201)
    def report(body: ReportBody):
        case = store.report_case(
            body.student_id, body.reporter, idem_key=body.idempotency_key
        )
        return serde.encode_case(case)

    @app.post("/api/lost-students/{case_id}/triage")
    def triage(case_id: str, body: TriageBody | None = None):
        as_of = body.as_of if body else None
        return serde.encode_case(store.triage_case(case_id, as_of))

    @app.post("/api/lost-students/{case_id}/contacted")
    def contacted(case_id: str, body: ProgressBody):
        return serde.encode_case(store.case_contacted(case_id, body.on, body.note))

    @app.post("/api/lost-students/{case_id}/meeting")
    def meeting(case_id: str, body: ProgressBody):
        return serde.encode_case(store.case_meeting(case_id, body.on))

    @app.post("/api/lost-students/{case_id}/close")
    def close(case_id: str, body: ProgressBody):
        return serde.encode_case(store.case_close(case_id, body.on, body.note))

    @app.get("/api/lost-students/stats")
    def stats():
        s = store.stats()
        return {"contacted": s.contacted, "meetings": s.meetings, "rate_pct": s.rate_pct}

    # -- attendance ------------------------------------------------------------------

    @app.get("/api/attendance/flags")
    def attendance_flags(week: date):
        return store.attendance_for(monday_of(week))

    @app.post("/api/attendance/evaluate")
    def attendance_evaluate(body: EvaluateBody):
        return store.evaluate_attendance_log(monday_of(body.week), body.log_csv)

    # -- calendar --------------------------------------------------------------------

    @app.get("/api/calendar/{ta_id}.ics")
    def calendar(ta_id: str):
        term_start = store.term_start or store.template.week_anchor
        text = export_ics(
            ta_id, store.template, store.roster, store.shifts, term_start, store.term_weeks
        )
        from fastapi.responses import Response

        return Response(content=text, media_type="text/calendar")

    if ui_dir is not None and ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/")
        def index():
            return RedirectResponse("/ui/")

    return app


def serve(config: ServiceConfig, ui_dir: Path | None = None) -> None:
    """Run the service until interrupted; snapshots state on shutdown."""
    import uvicorn

    store = OpsStore(config.data_dir, config)
    app = create_app(store, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise SystemExit(f"port {config.port} is already in use") from None
        raise
