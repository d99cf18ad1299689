"""Command-line entry points.

Each subcommand exits nonzero on error; --json switches the machine-readable
output mode where it applies.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import csvio, serde
from .attendance import AttendancePolicy, evaluate_attendance, parse_session_log
from .config import load_config
from .ics import export_ics
from .loststudents import (
    DetectionConfig,
    detect_onboarding,
    detect_proactive,
    ingest_lms_export,
    load_deliverables,
)
from .model import check_schedule
from .planner import format_plan, plan_org
from .solver import (
    DEFAULT_WEEK_ANCHOR,
    InfeasibilityReport,
    SolverConfig,
    TimeLimitExceeded,
    generate_schedule,
)
from .synth import write_demo_dataset


@click.group()
def main() -> None:
    """Course operations: staffing plans, schedules, swaps, lost students."""


@main.command()
@click.argument("students", type=int)
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
def plan(students: int, as_json: bool) -> None:
    """Staffing plan for a course of STUDENTS."""
    try:
        result = plan_org(students)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(json.dumps(result.__dict__, default=str, indent=2))
    else:
        click.echo(format_plan(result))


@main.command()
@click.option("--roster", "roster_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--shifts", "shifts_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--time-limit-ms", type=int, default=60_000, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), help="write schedule CSV here")
@click.option("--json", "as_json", is_flag=True)
def solve(roster_path, shifts_path, seed, time_limit_ms, out, as_json) -> None:
    """Generate a weekly schedule, or explain why none exists."""
    roster = csvio.load_roster(roster_path.read_text())
    shifts = csvio.load_shifts(shifts_path.read_text())
    config = SolverConfig(seed=seed, time_limit_ms=time_limit_ms)
    try:
        result = generate_schedule(roster, shifts, config)
    except TimeLimitExceeded as exc:
        click.echo(f"time limit exceeded: covered {exc.covered}/{exc.total} shifts", err=True)
        sys.exit(4)
    if isinstance(result, InfeasibilityReport):
        if as_json:
            click.echo(
                json.dumps(
                    {
                        "feasible": False,
                        "proof": result.proof_kind.value,
                        "uncovered_shift_ids": list(result.uncovered_shift_ids),
                        "tight_tas": [list(t) for t in result.tight_tas],
                    },
                    indent=2,
                )
            )
        else:
            click.echo(f"infeasible ({result.proof_kind.value})", err=True)
            for sid in result.uncovered_shift_ids:
                click.echo(f"  uncovered: {sid}", err=True)
        sys.exit(3)
    text = csvio.dump_schedule(result)
    if out:
        out.write_text(text)
        click.echo(f"wrote {out} ({len(result.assignments)} assignments)")
    elif as_json:
        click.echo(json.dumps(serde.encode_schedule(result), indent=2))
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--lms", "lms_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--deliverables", "deliverables_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--as-of", "as_of", type=click.DateTime(["%Y-%m-%d"]), required=True)
@click.option("--phase", type=click.Choice(["onboarding", "proactive"]), required=True)
@click.option("--term-start", type=click.DateTime(["%Y-%m-%d"]), required=True)
@click.option("--add-drop", type=click.DateTime(["%Y-%m-%d"]), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("cases.json"), show_default=True)
def detect(lms_path, deliverables_path, as_of, phase, term_start, add_drop, out) -> None:
    """Run lost-student detection over an LMS export."""
    deliverables = load_deliverables(deliverables_path.read_text())
    result = ingest_lms_export(lms_path.read_text(), deliverables)
    for reject in result.rejects:
        click.echo(f"reject line {reject.line}: {reject.reason}", err=True)
    config = DetectionConfig(term_start=term_start.date(), add_drop_date=add_drop.date())
    try:
        if phase == "onboarding":
            cases = detect_onboarding(result.records, config, as_of.date())
        else:
            cases = detect_proactive(result.records, config, as_of.date())
    except ValueError as exc:
        raise click.ClickException(str(exc))
    out.write_text(json.dumps([serde.encode_case(c) for c in cases], indent=2) + "\n")
    click.echo(f"{len(cases)} case(s) -> {out}")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--week", type=click.DateTime(["%Y-%m-%d"]), required=True, help="Monday of the week")
@click.option("--roster", "roster_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--shifts", "shifts_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--late-threshold", type=float, default=10, show_default=True)
@click.option("--early-threshold", type=float, default=10, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("flags.json"), show_default=True)
def attendance(log_path, week, roster_path, shifts_path, schedule_path,
               late_threshold, early_threshold, out) -> None:
    """Flag absent/late/early TAs from a session log."""
    week_of = week.date()
    roster = csvio.load_roster(roster_path.read_text())
    shifts = csvio.load_shifts(shifts_path.read_text())
    schedule = csvio.load_schedule(schedule_path.read_text(), week_of)
    try:
        parsed = parse_session_log(log_path.read_text())
        policy = AttendancePolicy(late_threshold, early_threshold)
        report = evaluate_attendance(
            parsed.entries, schedule, roster, shifts, policy, week_of=week_of
        )
    except Exception as exc:
        raise click.ClickException(str(exc))
    for flag in report.flags:
        extra = f" by {flag.minutes} min" if flag.minutes is not None else ""
        click.echo(
            f"{flag.occurrence_date}  {flag.shift_id:<14} {flag.ta_id:<8} "
            f"{flag.kind.value}{extra}"
        )
    if not report.flags:
        click.echo("no flags")
    out.write_text(
        json.dumps(
            {
                "flags": [serde.encode_flag(f) for f in report.flags],
                "notes": [serde.encode_note(n) for n in report.notes],
            },
            indent=2,
        )
        + "\n"
    )
    click.echo(f"wrote {out}")


@main.command()
@click.option("--ta", "ta_id", required=True)
@click.option("--roster", "roster_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--shifts", "shifts_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--term-start", type=click.DateTime(["%Y-%m-%d"]), required=True)
@click.option("--weeks", type=int, default=14, show_default=True)
@click.option("--out", type=click.Path(path_type=Path))
def ics(ta_id, roster_path, shifts_path, schedule_path, term_start, weeks, out) -> None:
    """Export one TA's weekly duties as an ICS calendar."""
    roster = csvio.load_roster(roster_path.read_text())
    shifts = csvio.load_shifts(shifts_path.read_text())
    schedule = csvio.load_schedule(schedule_path.read_text(), DEFAULT_WEEK_ANCHOR)
    try:
        text = export_ics(ta_id, schedule, roster, shifts, term_start.date(), weeks)
    except Exception as exc:
        raise click.ClickException(str(exc))
    if out:
        out.write_bytes(text.encode("utf-8"))
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path))
@click.option("--port", type=int)
@click.option("--data-dir", type=click.Path(path_type=Path))
@click.option("--ui-dir", type=click.Path(path_type=Path))
def serve(config_path, port, data_dir, ui_dir) -> None:
    """Run the HTTP service."""
    from dataclasses import replace

    from .service import serve as run_service

    try:
        config = load_config(config_path)
        if port is not None:
            config = replace(config, port=port)
        if data_dir is not None:
            config = replace(config, data_dir=data_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    run_service(config, ui_dir=ui_dir)


@main.command()
@click.option("--dir", "target", type=click.Path(path_type=Path), default=Path("data"), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def demo(target: Path, seed: int) -> None:
    """Write a full demo data directory (roster, shifts, schedule, fixtures)."""
    inst = write_demo_dataset(target, seed)
    problems = check_schedule(inst.planted, inst.roster, inst.shifts)
    assert not problems
    click.echo(
        f"wrote {target}: {len(inst.roster)} TAs, {len(inst.shifts)} shifts, "
        f"{len(inst.planted.assignments)} assignments"
    )


if __name__ == "__main__":
    main()
