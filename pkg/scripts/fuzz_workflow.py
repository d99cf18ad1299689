"""Long-running workflow safety soak.

Hammers the swap-request state machine with random (frequently invalid)
operation sequences and verifies the invariants the shipping gate checks at
10k trials, but with the trial count as a dial:

    python3 scripts/fuzz_workflow.py --trials 1000000 --seed 4
"""

import argparse
import random
from datetime import date, datetime, timedelta

from courseops.model import (
    Day,
    Modality,
    Role,
    Schedule,
    Shift,
    ShiftKind,
    TeachingAssistant,
    TimeProfile,
    WeekSlot,
    check_schedule,
)
from courseops.workflow import (
    Cancelled,
    DutyRoster,
    InvalidResolution,
    ModalityChange,
    NoOwner,
    OneOff,
    PeerSwap,
    Replacement,
    RequestState,
    Until,
    WrongState,
    auto_claim,
    escalate,
    occurrence_in_week,
    resolve,
    submit_request,
)

MONDAY = date(2022, 9, 5)
LEGAL = {
    (RequestState.SUBMITTED, RequestState.CLAIMED),
    (RequestState.SUBMITTED, RequestState.ESCALATED),
    (RequestState.CLAIMED, RequestState.ESCALATED),
    (RequestState.CLAIMED, RequestState.RESOLVED),
}


def build_fixture():
    wide = [WeekSlot(d, 8 * 60, 10 * 60) for d in (Day.MON, Day.TUE, Day.WED, Day.THU, Day.FRI)]

    def ta(ta_id, slots):
        return TeachingAssistant(
            id=ta_id,
            display_name=ta_id,
            email=f"{ta_id}@x",
            role=Role.MEMBER,
            team_id="R1",
            profile=TimeProfile.from_hours(f"P{ta_id}", 4, 4, 0, 0, 0, 0, 0),
            availability=frozenset(slots),
        )

    def oh(sid, day, modality=Modality.IN_PERSON):
        return Shift(
            id=sid,
            kind=ShiftKind.OFFICE_HOUR,
            slot=WeekSlot(day, 10 * 60, 60),
            modality=modality,
            required_staff=1,
        )

    roster = [ta("ann", wide), ta("ben", wide), ta("cal", [wide[2]])]
    shifts = [
        oh("mon-10", Day.MON),
        oh("tue-10", Day.TUE),
        oh("wed-10", Day.WED),
        oh("online-thu", Day.THU, Modality.ONLINE),
    ]
    schedule = Schedule.of(
        [("ann", "mon-10"), ("ben", "tue-10"), ("cal", "wed-10"), ("ann", "online-thu")],
        MONDAY,
    )
    duty = DutyRoster(
        {Day.MON: "ann", Day.TUE: "ben", Day.WED: "cal", Day.THU: "ann", Day.FRI: "ben"}
    )
    return roster, shifts, schedule, duty


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()

    roster, shifts, schedule, duty = build_fixture()
    ta_ids = [t.id for t in roster]
    shift_ids = [s.id for s in shifts]
    by_ta = schedule.by_ta()
    rng = random.Random(args.seed)
    ops = failures = 0

    for trial in range(args.trials):
        requester = rng.choice(ta_ids)
        picked = rng.choice(by_ta[requester])
        shift = next(s for s in shifts if s.id == picked)
        occurrence = occurrence_in_week(shift.slot.day, MONDAY)
        duration = rng.choice(
            [OneOff(), Until(end=occurrence + timedelta(days=7 * rng.randrange(1, 5)))]
        )
        req = submit_request(
            f"f{trial}", requester, shift.id, occurrence, duration, "soak",
            schedule, shifts, today=date(2022, 9, 1), now=datetime(2022, 9, 1, 9, 0),
        )
        for _ in range(rng.randrange(1, 6)):
            before = req.state
            op = rng.randrange(3)
            ops += 1
            try:
                if op == 0:
                    req = auto_claim(req, duty)
                elif op == 1:
                    resolution = rng.choice(
                        [
                            Cancelled(),
                            ModalityChange(),
                            Replacement(substitute=rng.choice(ta_ids)),
                            PeerSwap(
                                counterparty=rng.choice(ta_ids),
                                counterparty_shift_id=rng.choice(shift_ids),
                            ),
                        ]
                    )
                    outcome = resolve(req, resolution, schedule, roster, shifts)
                    req = outcome.request
                    if check_schedule(outcome.schedule, roster, shifts):
                        failures += 1
                        print(f"trial {trial}: resolved schedule fails verification")
                else:
                    req = escalate(req, datetime(2022, 9, 4, 23, 0), shifts)
            except (WrongState, InvalidResolution, NoOwner):
                if req.state is not before:
                    failures += 1
                    print(f"trial {trial}: failed op mutated state")
                continue
            if req.state is not before and (before, req.state) not in LEGAL:
                failures += 1
                print(f"trial {trial}: illegal {before.value} -> {req.state.value}")

        if trial and trial % 50_000 == 0:
            print(f"... {trial} trials, {ops} ops, {failures} failures")

    print(f"{args.trials} trials, {ops} ops, {failures} failures")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
