"""Lost-student detection against an independent rule oracle, the case state
machine, triage fairness, and the contact-to-meeting funnel."""

import random
from datetime import date, datetime, timedelta

import pytest

from courseops.loststudents import (
    CaseState,
    ContactHistory,
    Deliverable,
    DeliverableKind,
    DetectionConfig,
    GradeCell,
    IllegalTransition,
    LateJoin,
    NoDiscord,
    NoLmsAccess,
    ProactiveRule,
    Reported,
    SchemaError,
    StudentRecord,
    UnknownStudent,
    close_case,
    conversion_stats,
    detect_onboarding,
    detect_proactive,
    ingest_lms_export,
    load_deliverables,
    mark_contacted,
    mark_meeting,
    record_report,
    triage,
)
from courseops.model import Team
from courseops.synth import deliverable_catalog, student_fixture

from .oracles import proactive_trigger_kind

TERM_START = date(2022, 9, 5)
ADD_DROP = date(2022, 9, 19)
CONFIG = DetectionConfig(term_start=TERM_START, add_drop_date=ADD_DROP)


def _record(student_id="s1", enrollment=TERM_START, access=datetime(2022, 9, 5, 8),
            discord=True, grades=()):
    return StudentRecord(student_id, enrollment, access, discord, tuple(grades))


def _cell(kind, index, due, score, max_score=10.0, submitted=None):
    if submitted is None:
        submitted = score is not None
    return GradeCell(kind, index, due, max_score, score, submitted)


def _labs(*scores, max_score=10.0):
    """Weekly lab cells due Fridays from week 1; None means unsubmitted."""
    out = []
    for i, score in enumerate(scores):
        due = TERM_START + timedelta(days=4 + 7 * i)
        out.append(_cell(DeliverableKind.LAB, i + 1, due, score, max_score))
    return out


# ---------------------------------------------------------------- onboarding


def test_late_join_boundary():
    on_time = _record(enrollment=TERM_START + timedelta(days=7))
    late = _record(enrollment=TERM_START + timedelta(days=8))
    cases = detect_onboarding([on_time, late], CONFIG, ADD_DROP)
    assert [c.student_id for c in cases] == [late.student_id]
    assert isinstance(cases[0].trigger, LateJoin)


def test_onboarding_triggers_stack_per_student():
    r = _record(enrollment=TERM_START + timedelta(days=10), access=None, discord=False)
    cases = detect_onboarding([r], CONFIG, ADD_DROP)
    assert [type(c.trigger) for c in cases] == [LateJoin, NoLmsAccess, NoDiscord]
    assert len({c.id for c in cases}) == 3
    assert all(c.state is CaseState.IDENTIFIED for c in cases)


def test_onboarding_rejected_after_add_drop():
    with pytest.raises(ValueError):
        detect_onboarding([_record()], CONFIG, ADD_DROP + timedelta(days=1))


def test_onboarding_on_fixture_counts():
    fx = student_fixture(seed=0)
    result = ingest_lms_export(fx.csv_text, list(fx.deliverables))
    assert not result.rejects
    cases = detect_onboarding(result.records, CONFIG, ADD_DROP)
    late = {c.student_id for c in cases if isinstance(c.trigger, LateJoin)}
    nolms = {c.student_id for c in cases if isinstance(c.trigger, NoLmsAccess)}
    assert late == set(fx.late_joiners)
    assert nolms == set(fx.non_accessors)


# ---------------------------------------------------------------- proactive


def test_proactive_needs_full_window():
    # only one lab due so far; the default window needs two
    r = _record(grades=_labs(None))
    assert detect_proactive([r], CONFIG, date(2022, 9, 26)) == []


def test_proactive_flags_failing_streak():
    r = _record(grades=_labs(8.0, 2.0, None))
    as_of = date(2022, 9, 26)  # labs 1-3 due by now
    cases = detect_proactive([r], CONFIG, as_of)
    assert len(cases) == 1
    assert cases[0].trigger == ProactiveRule(DeliverableKind.LAB)
    assert cases[0].id == f"ls-s1-proactive-{as_of.isoformat()}"


def test_proactive_streak_must_be_recent():
    # early failures recovered by later passes do not fire
    r = _record(grades=_labs(None, 1.0, 8.0, 9.0))
    assert detect_proactive([r], CONFIG, date(2022, 10, 3)) == []


def test_ungraded_submission_is_not_failing():
    graded_fail = _labs(8.0, 2.0)
    pending = [
        _cell(DeliverableKind.LAB, 1, TERM_START + timedelta(days=4), 8.0),
        _cell(DeliverableKind.LAB, 2, TERM_START + timedelta(days=11), None, submitted=True),
    ]
    as_of = date(2022, 9, 20)
    assert detect_proactive([_record(grades=graded_fail)], CONFIG, as_of) == []
    assert detect_proactive([_record(grades=pending)], CONFIG, as_of) == []
    both_bad = _labs(2.0, None)
    assert len(detect_proactive([_record(grades=both_bad)], CONFIG, as_of)) == 1


def test_cutoff_is_strict_fraction():
    # cutoff 0.5 of 10: a score of exactly 5 passes, 4.9 fails
    exactly = _record(grades=_labs(5.0, 5.0))
    under = _record(student_id="s2", grades=_labs(4.9, 4.9))
    cases = detect_proactive([exactly, under], CONFIG, date(2022, 9, 20))
    assert [c.student_id for c in cases] == ["s2"]


def test_cutoff_monotone():
    scores = _labs(6.0, 6.0)
    low = DetectionConfig(
        term_start=TERM_START, add_drop_date=ADD_DROP,
        cutoff_fraction={k: 0.5 for k in DeliverableKind},
    )
    high = DetectionConfig(
        term_start=TERM_START, add_drop_date=ADD_DROP,
        cutoff_fraction={k: 0.7 for k in DeliverableKind},
    )
    as_of = date(2022, 9, 20)
    assert detect_proactive([_record(grades=scores)], low, as_of) == []
    assert len(detect_proactive([_record(grades=scores)], high, as_of)) == 1


def test_lab_rule_wins_over_quiz():
    grades = _labs(1.0, 1.0) + [
        _cell(DeliverableKind.QUIZ, 1, date(2022, 9, 14), 2.0, 20.0),
        _cell(DeliverableKind.QUIZ, 2, date(2022, 9, 21), 1.0, 20.0),
    ]
    cases = detect_proactive([_record(grades=sorted(grades, key=lambda c: c.due_date))],
                             CONFIG, date(2022, 9, 26))
    assert len(cases) == 1  # one case per student per run
    assert cases[0].trigger == ProactiveRule(DeliverableKind.LAB)


def test_any_of_mode():
    grades = _labs(8.0, 1.0)
    strict = detect_proactive([_record(grades=grades)], CONFIG, date(2022, 9, 20))
    assert strict == []
    any_cfg = DetectionConfig(term_start=TERM_START, add_drop_date=ADD_DROP, any_of=True)
    assert len(detect_proactive([_record(grades=grades)], any_cfg, date(2022, 9, 20))) == 1


def test_proactive_rejected_before_add_drop():
    with pytest.raises(ValueError):
        detect_proactive([], CONFIG, ADD_DROP)


def test_proactive_matches_rule_oracle_on_300_records():
    """Randomized records cross-checked against a from-scratch reading of the
    windowing rule."""
    catalog = deliverable_catalog()
    rng = random.Random(20220919)

    for trial in range(300):
        grades = []
        for d in sorted(catalog, key=lambda d: (d.due_date, d.kind.value, d.index)):
            roll = rng.random()
            if roll < 0.25:
                cell = _cell(d.kind, d.index, d.due_date, None, d.max_score)
            elif roll < 0.35:
                cell = _cell(d.kind, d.index, d.due_date, None, d.max_score, submitted=True)
            else:
                cell = _cell(d.kind, d.index, d.due_date,
                             round(rng.uniform(0, d.max_score), 1), d.max_score)
            grades.append(cell)
        record = _record(student_id=f"r{trial}", grades=grades)
        config = DetectionConfig(
            term_start=TERM_START,
            add_drop_date=ADD_DROP,
            recent_labs=rng.choice((1, 2, 3)),
            recent_quizzes=rng.choice((1, 2)),
            any_of=rng.random() < 0.3,
            cutoff_fraction={k: rng.choice((0.4, 0.5, 0.6)) for k in DeliverableKind},
        )
        as_of = ADD_DROP + timedelta(days=rng.randrange(1, 40))
        cases = detect_proactive([record], config, as_of)
        expected = proactive_trigger_kind(record, config, as_of)
        if expected is None:
            assert cases == [], f"trial {trial}: spurious {cases}"
        else:
            assert len(cases) == 1, f"trial {trial}: expected {expected}"
            assert cases[0].trigger == ProactiveRule(expected)


def test_proactive_on_fixture_plants():
    fx = student_fixture(seed=0)
    result = ingest_lms_export(fx.csv_text, list(fx.deliverables))
    as_of = max(d.due_date for d in fx.deliverables) + timedelta(days=3)
    cases = detect_proactive(result.records, CONFIG, as_of)
    by_kind = {}
    for c in cases:
        by_kind.setdefault(c.trigger.kind, set()).add(c.student_id)
    assert by_kind[DeliverableKind.LAB] == set(fx.failing_labs)
    assert by_kind[DeliverableKind.QUIZ] == set(fx.failing_quizzes)
    assert by_kind[DeliverableKind.MIDTERM] == set(fx.failing_midterm)


# ---------------------------------------------------------------- ingestion


def test_ingest_missing_column_names_it():
    catalog = [Deliverable(DeliverableKind.LAB, 1, date(2022, 9, 9), 10)]
    text = "student_id,enrollment_date,first_lms_access,discord_joined,lab1_score\ns1,2022-09-05,,true,5\n"
    with pytest.raises(SchemaError, match="lab1_submitted"):
        ingest_lms_export(text, catalog)


def test_ingest_bad_rows_become_rejects():
    catalog = [Deliverable(DeliverableKind.LAB, 1, date(2022, 9, 9), 10)]
    header = "student_id,enrollment_date,first_lms_access,discord_joined,lab1_score,lab1_submitted"
    text = "\n".join([
        header,
        "s1,2022-09-05,2022-09-05T08:00:00,true,5,true",
        ",2022-09-05,,true,,false",            # blank id
        "s3,not-a-date,,true,,false",          # bad enrollment
        "s4,2022-09-05,,maybe,,false",         # bad discord flag
        "s5,2022-09-05,,true,99,true",         # score above max
        "s6,2022-09-05,,false,,false",
    ]) + "\n"
    result = ingest_lms_export(text, catalog)
    assert [r.student_id for r in result.records] == ["s1", "s6"]
    assert [r.line for r in result.rejects] == [3, 4, 5, 6]


def test_ingest_conservation_fuzz():
    catalog = [Deliverable(DeliverableKind.LAB, 1, date(2022, 9, 9), 10)]
    header = "student_id,enrollment_date,first_lms_access,discord_joined,lab1_score,lab1_submitted"
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randrange(1, 25)
        rows = [header]
        for i in range(n):
            if rng.random() < 0.3:
                rows.append(f"b{i},bad-date,,true,,false")
            else:
                rows.append(f"g{i},2022-09-0{rng.randrange(1, 10)},,true,{rng.randrange(0, 11)},true")
        result = ingest_lms_export("\n".join(rows) + "\n", catalog)
        assert len(result.records) + len(result.rejects) == n


def test_load_deliverables_round_trip():
    text = "kind,index,due_date,max_score\nLab,1,2022-09-09,10\nMidterm,1,2022-10-07,100\n"
    cat = load_deliverables(text)
    assert cat == [
        Deliverable(DeliverableKind.LAB, 1, date(2022, 9, 9), 10.0),
        Deliverable(DeliverableKind.MIDTERM, 1, date(2022, 10, 7), 100.0),
    ]


def test_grade_cell_invariants():
    with pytest.raises(ValueError, match="unsubmitted"):
        GradeCell(DeliverableKind.LAB, 1, date(2022, 9, 9), 10, 5.0, False)
    with pytest.raises(ValueError, match="outside"):
        GradeCell(DeliverableKind.LAB, 1, date(2022, 9, 9), 10, 11.0, True)


def test_record_requires_due_date_order():
    cells = [
        _cell(DeliverableKind.LAB, 2, date(2022, 9, 16), 5.0),
        _cell(DeliverableKind.LAB, 1, date(2022, 9, 9), 5.0),
    ]
    with pytest.raises(ValueError, match="due-date order"):
        _record(grades=cells)


# ---------------------------------------------------------------- lifecycle


def _team():
    return Team(id="F3", lead_ta="lead", member_ids=("ta-a", "ta-b", "ta-c"))


def _identified(student_id="s1", case_id="c1"):
    return record_report([], [student_id], student_id, "instructor", case_id)


def test_case_walk_to_closed():
    case = _identified()
    case = triage(case, ContactHistory(), _team(), CONFIG, date(2022, 9, 20))
    assert case.state is CaseState.ASSIGNED
    assert case.assigned_to == "ta-a"
    case = mark_contacted(case, date(2022, 9, 21), "emailed")
    case = mark_meeting(case, date(2022, 9, 23))
    case = close_case(case, date(2022, 9, 24), "re-engaged")
    assert case.state is CaseState.CLOSED
    assert not case.open
    assert case.notes == ("emailed", "re-engaged")


def test_skipped_can_still_be_contacted():
    history = ContactHistory({"s1": date(2022, 9, 19)})
    case = triage(_identified(), history, _team(), CONFIG, date(2022, 9, 20))
    assert case.state is CaseState.SKIPPED
    assert mark_contacted(case, date(2022, 10, 5)).state is CaseState.CONTACTED


def test_illegal_transitions_raise():
    case = _identified()
    with pytest.raises(IllegalTransition):
        mark_meeting(case, date(2022, 9, 21))  # must be contacted first
    with pytest.raises(IllegalTransition):
        close_case(case, date(2022, 9, 21))
    contacted = mark_contacted(
        triage(case, ContactHistory(), _team(), CONFIG, date(2022, 9, 20)),
        date(2022, 9, 21),
    )
    closed = close_case(contacted, date(2022, 9, 22))
    with pytest.raises(IllegalTransition):
        mark_contacted(closed, date(2022, 9, 23))


def test_cooldown_boundary_exclusive():
    last = date(2022, 9, 10)
    history = ContactHistory({"s1": last})
    at_cooldown = triage(_identified(), history, _team(), CONFIG,
                         last + timedelta(days=CONFIG.cooldown_days))
    assert at_cooldown.state is CaseState.ASSIGNED
    inside = triage(_identified(), ContactHistory({"s1": last}), _team(), CONFIG,
                    last + timedelta(days=CONFIG.cooldown_days - 1))
    assert inside.state is CaseState.SKIPPED


def test_round_robin_fairness():
    history = ContactHistory()
    team = _team()
    tally = {}
    for i in range(20):
        case = triage(_identified(f"s{i}", f"c{i}"), history, team, CONFIG,
                      date(2022, 9, 20))
        tally[case.assigned_to] = tally.get(case.assigned_to, 0) + 1
    # 20 cases over 3 members: nobody gets fewer than floor or more than ceil
    assert sorted(tally.values()) == [6, 7, 7]
    assert set(tally) == {"ta-a", "ta-b", "ta-c"}


def test_record_report_idempotent_and_validating():
    first = record_report([], ["s1"], "s1", "ta-x", "c1")
    again = record_report([first], ["s1"], "s1", "ta-y", "c2")
    assert again is first  # open report reused, no duplicate
    closed = close_case(
        mark_contacted(
            triage(first, ContactHistory(), _team(), CONFIG, date(2022, 9, 20)),
            date(2022, 9, 21),
        ),
        date(2022, 9, 22),
    )
    fresh = record_report([closed], ["s1"], "s1", "ta-y", "c2")
    assert fresh.id == "c2"
    with pytest.raises(UnknownStudent):
        record_report([], ["s1"], "s999", "ta-x", "c3")
    assert isinstance(first.trigger, Reported) and first.trigger.by == "ta-x"


# ---------------------------------------------------------------- funnel


def test_conversion_stats_reference_value():
    cases = []
    for i in range(280):
        case = mark_contacted(
            triage(_identified(f"s{i}", f"c{i}"), ContactHistory(), _team(), CONFIG,
                   date(2022, 9, 20)),
            date(2022, 9, 21),
        )
        if i < 83:
            case = mark_meeting(case, date(2022, 9, 25))
        cases.append(case)
    stats = conversion_stats(cases)
    assert stats.contacted == 280
    assert stats.meetings == 83
    assert stats.rate_pct == 30  # 29.64% rounds half up to 30


def test_conversion_stats_rounding_and_empty():
    assert conversion_stats([]).rate_pct == 0
    half = [
        mark_contacted(
            triage(_identified("a", "ca"), ContactHistory(), _team(), CONFIG,
                   date(2022, 9, 20)),
            date(2022, 9, 21),
        ),
        mark_meeting(
            mark_contacted(
                triage(_identified("b", "cb"), ContactHistory(), _team(), CONFIG,
                       date(2022, 9, 20)),
                date(2022, 9, 21),
            ),
            date(2022, 9, 22),
        ),
    ]
    assert conversion_stats(half).rate_pct == 50
