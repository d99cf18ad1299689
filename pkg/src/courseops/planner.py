"""Organizational scaling arithmetic: from enrollment to TA headcount, team
structure, instructor count, and the extra-management-layer warning."""

from __future__ import annotations

from dataclasses import dataclass, fields


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class PlannerParams:
    students_per_ta: int = 25
    team_size: int = 6
    functional_team_count: int = 5
    students_per_regular_team: int = 150
    students_per_instructor: int = 400
    instructor_layer_limit: int = 8

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} must be >= 1")


@dataclass(frozen=True)
class OrgPlan:
    students: int
    ta_count: int
    functional_ta_count: int
    regular_ta_count: int
    regular_team_count: int
    instructor_count: int
    needs_extra_layer: bool


def plan_org(students: int, params: PlannerParams = PlannerParams()) -> OrgPlan:
    """Compute the staffing plan for a given enrollment.

    Functional teams are filled first at full size; remaining TAs form
    regular teams.  The warning fires strictly above the instructor-layer
    limit.
    """
    if students < 1:
        raise ValueError("students must be >= 1")
    ta_count = _ceil_div(students, params.students_per_ta)
    functional_ta_count = params.functional_team_count * params.team_size
    regular_ta_count = max(0, ta_count - functional_ta_count)
    regular_team_count = _ceil_div(regular_ta_count, params.team_size)
    instructor_count = _ceil_div(students, params.students_per_instructor)
    return OrgPlan(
        students=students,
        ta_count=ta_count,
        functional_ta_count=functional_ta_count,
        regular_ta_count=regular_ta_count,
        regular_team_count=regular_team_count,
        instructor_count=instructor_count,
        needs_extra_layer=instructor_count > params.instructor_layer_limit,
    )


def format_plan(plan: OrgPlan) -> str:
    """Plain-text table for the CLI."""
    rows = [
        ("students", plan.students),
        ("TAs", plan.ta_count),
        ("functional TAs", plan.functional_ta_count),
        ("regular TAs", plan.regular_ta_count),
        ("regular teams", plan.regular_team_count),
        ("instructors", plan.instructor_count),
        ("extra management layer", "yes" if plan.needs_extra_layer else "no"),
    ]
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label:<{width}}  {value}" for label, value in rows)
