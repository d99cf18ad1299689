"""Weekly schedule generation under staffing, availability, overlap, and
budget constraints.

Small instances are solved by a complete depth-first search (fail-first shift
ordering, budget and capacity pruning), so the feasible/infeasible verdict is
exact.  Larger instances use the same search with a per-restart node budget
and seeded restart jitter.  Among feasible schedules the search greedily
favors balanced load and finishes with a deterministic local improvement pass
that reduces the variance of per-TA load/budget ratios.
"""

from __future__ import annotations

import enum
import itertools
import random
import time
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from typing import Iterable, Sequence

from .model import (
    Schedule,
    Shift,
    TeachingAssistant,
    UnknownIdError,
    availability_covers,
    check_schedule,
    index_by_id,
)

DEFAULT_WEEK_ANCHOR = date(2022, 9, 5)  # fixed Monday; keeps output byte-stable

_RESTART_NODE_BUDGET = 60_000
_TIME_CHECK_MASK = 0x3F  # check the clock every 64 nodes; nodes can cost ~2ms
_BALANCE_PASS_CAP = 400


class ProofKind(enum.Enum):
    EXHAUSTED = "Exhausted"
    CAPACITY_BOUND = "CapacityBound"


@dataclass(frozen=True)
class SizeBound:
    max_tas: int = 8
    max_shifts: int = 12


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    time_limit_ms: int = 60_000
    exact_size_bound: SizeBound = SizeBound()
    overcover_allowed: bool = False
    week_anchor: date = DEFAULT_WEEK_ANCHOR

    def __post_init__(self) -> None:
        if self.time_limit_ms <= 0:
            raise ValueError("time_limit_ms must be positive")


@dataclass(frozen=True)
class InfeasibilityReport:
    uncovered_shift_ids: tuple[str, ...]
    tight_tas: tuple[tuple[str, float, float], ...]
    proof_kind: ProofKind

    def __post_init__(self) -> None:
        if self.proof_kind is ProofKind.EXHAUSTED and not self.uncovered_shift_ids:
            raise ValueError("exhausted proof requires at least one uncovered shift")


class InvalidInput(ValueError):
    """Roster or shift inputs are malformed (duplicate or dangling ids)."""


class TimeLimitExceeded(Exception):
    """Search ran out of time; carries the best partial coverage found."""

    def __init__(self, best_partial: Schedule, covered: int, total: int):
        super().__init__(f"time limit exceeded with {covered}/{total} shifts covered")
        self.best_partial = best_partial
        self.covered = covered
        self.total = total


class _Deadline:
    def __init__(self, limit_ms: int):
        self.at = time.monotonic() + limit_ms / 1000.0

    def expired(self) -> bool:
        return time.monotonic() > self.at


class _SearchState:
    """Mutable assignment state shared across the DFS."""

    __slots__ = ("staff", "load", "ta_slots", "nodes")

    def __init__(self, tas: Sequence[TeachingAssistant]):
        self.staff: dict[str, tuple[str, ...]] = {}
        self.load: dict[str, int] = {ta.id: 0 for ta in tas}
        self.ta_slots: dict[str, list] = {ta.id: [] for ta in tas}
        self.nodes = 0


class _Solver:
    def __init__(
        self,
        roster: Sequence[TeachingAssistant],
        shifts: Sequence[Shift],
        config: SolverConfig,
    ):
        try:
            self.tas = index_by_id(roster, "TA")
            self.shifts = index_by_id(shifts, "shift")
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
        self.config = config
        self.budget = {ta.id: ta.profile.regular_minutes for ta in roster}
        self.eligible: dict[str, list[str]] = {}
        for s in shifts:
            self.eligible[s.id] = sorted(
                ta.id
                for ta in roster
                if availability_covers(ta.availability, s.slot)
                and self.budget[ta.id] >= s.slot.duration_min
            )
        self.best_partial: dict[str, tuple[str, ...]] = {}

    # -- candidate machinery ------------------------------------------------

    def _candidates(self, state: _SearchState, shift: Shift) -> list[str]:
        out = []
        for ta_id in self.eligible[shift.id]:
            if state.load[ta_id] + shift.slot.duration_min > self.budget[ta_id]:
                continue
            if any(shift.slot.overlaps(s) for s in state.ta_slots[ta_id]):
                continue
            out.append(ta_id)
        return out

    def _order_candidates(self, state: _SearchState, cands: list[str], jitter: dict[str, int]):
        cands.sort(key=lambda t: (state.load[t], jitter.get(t, 0), t))

    # -- pruning -------------------------------------------------------------

    def _prune(self, state: _SearchState, uncovered: list[Shift]) -> bool:
        remaining_demand = sum(s.required_staff * s.slot.duration_min for s in uncovered)
        remaining_capacity = sum(
            self.budget[t] - state.load[t] for t in self.budget if self.budget[t] > state.load[t]
        )
        return remaining_capacity < remaining_demand

    # -- search --------------------------------------------------------------

    def _dfs(
        self,
        state: _SearchState,
        uncovered: list[Shift],
        deadline: _Deadline,
        node_cap: int | None,
        jitter: dict[str, int],
    ) -> bool:
        state.nodes += 1
        # phase 1 so the very first node sees an already-expired deadline
        if (state.nodes & _TIME_CHECK_MASK) == 1 and deadline.expired():
            raise _OutOfTime()
        if node_cap is not None and state.nodes > node_cap:
            raise _OutOfNodes()
        if len(state.staff) > len(self.best_partial):
            self.best_partial = dict(state.staff)
        if not uncovered:
            return True
        if self._prune(state, uncovered):
            return False

        # Fail-first: branch on the shift with the fewest live candidates.
        scored: list[tuple[int, str, Shift, list[str]]] = []
        for s in uncovered:
            cands = self._candidates(state, s)
            if len(cands) < s.required_staff:
                return False
            scored.append((len(cands), s.id, s, cands))
        scored.sort(key=lambda item: (item[0], item[1]))
        _, _, shift, cands = scored[0]
        rest = [s for s in uncovered if s.id != shift.id]

        self._order_candidates(state, cands, jitter)
        for combo in itertools.combinations(cands, shift.required_staff):
            state.staff[shift.id] = combo
            for t in combo:
                state.load[t] += shift.slot.duration_min
                state.ta_slots[t].append(shift.slot)
            if self._dfs(state, rest, deadline, node_cap, jitter):
                return True
            for t in combo:
                state.load[t] -= shift.slot.duration_min
                state.ta_slots[t].remove(shift.slot)
            del state.staff[shift.id]
        return False

    def solve_exact(self, deadline: _Deadline) -> dict[str, tuple[str, ...]] | None:
        state = _SearchState(list(self.tas.values()))
        try:
            found = self._dfs(state, list(self.shifts.values()), deadline, None, {})
        except _OutOfNodes:  # pragma: no cover - no cap in exact mode
            raise AssertionError("node cap hit in exact mode")
        return dict(state.staff) if found else None

    def solve_heuristic(self, deadline: _Deadline) -> dict[str, tuple[str, ...]] | None:
        rng = random.Random(self.config.seed)
        ta_ids = sorted(self.budget)
        restart = 0
        while True:
            jitter = (
                {t: rng.randrange(1 << 16) for t in ta_ids} if restart > 0 else {}
            )
            state = _SearchState(list(self.tas.values()))
            try:
                if self._dfs(state, list(self.shifts.values()), deadline, _RESTART_NODE_BUDGET, jitter):
                    return dict(state.staff)
                return None  # exhausted within the node budget: genuine proof
            except _OutOfNodes:
                restart += 1
                if deadline.expired():
                    raise _OutOfTime() from None

    # -- balance improvement ---------------------------------------------------

    def _variance(self, load: dict[str, int]) -> Fraction:
        ratios = [
            Fraction(load[t], self.budget[t]) for t in sorted(self.budget) if self.budget[t] > 0
        ]
        if not ratios:
            return Fraction(0)
        mean = sum(ratios) / len(ratios)
        return sum((r - mean) ** 2 for r in ratios) / len(ratios)

    def improve_balance(self, staff: dict[str, tuple[str, ...]]) -> dict[str, tuple[str, ...]]:
        """Move single assignments between TAs while the load-ratio variance
        strictly decreases; first-improvement, deterministic order."""
        load = {t: 0 for t in self.budget}
        ta_slots: dict[str, list] = {t: [] for t in self.budget}
        for sid, combo in staff.items():
            for t in combo:
                load[t] += self.shifts[sid].slot.duration_min
                ta_slots[t].append(self.shifts[sid].slot)

        current = self._variance(load)
        for _ in range(_BALANCE_PASS_CAP):
            best_move = None
            for sid in sorted(staff):
                shift = self.shifts[sid]
                combo = staff[sid]
                for out_ta in combo:
                    for in_ta in self.eligible[sid]:
                        if in_ta in combo:
                            continue
                        if load[in_ta] + shift.slot.duration_min > self.budget[in_ta]:
                            continue
                        if any(shift.slot.overlaps(s) for s in ta_slots[in_ta]):
                            continue
                        load[out_ta] -= shift.slot.duration_min
                        load[in_ta] += shift.slot.duration_min
                        candidate = self._variance(load)
                        load[out_ta] += shift.slot.duration_min
                        load[in_ta] -= shift.slot.duration_min
                        if candidate < current:
                            best_move = (sid, out_ta, in_ta, candidate)
                            break
                    if best_move:
                        break
                if best_move:
                    break
            if not best_move:
                break
            sid, out_ta, in_ta, current = best_move
            shift = self.shifts[sid]
            staff[sid] = tuple(sorted(t for t in staff[sid] if t != out_ta) + [in_ta])
            load[out_ta] -= shift.slot.duration_min
            load[in_ta] += shift.slot.duration_min
            ta_slots[out_ta].remove(shift.slot)
            ta_slots[in_ta].append(shift.slot)
        return staff

    # -- reporting ---------------------------------------------------------------

    def report(self, proof: ProofKind) -> InfeasibilityReport:
        uncovered = tuple(sorted(set(self.shifts) - set(self.best_partial)))
        tight = []
        for ta_id in sorted(self.budget):
            demanded = sum(
                s.slot.duration_min for s in self.shifts.values() if ta_id in self.eligible[s.id]
            )
            if demanded > self.budget[ta_id]:
                tight.append((ta_id, self.budget[ta_id] / 60, demanded / 60))
        return InfeasibilityReport(uncovered, tuple(tight), proof)

    def capacity_proof(self) -> InfeasibilityReport | None:
        """A sound infeasibility certificate that needs no search, if one exists."""
        short = tuple(
            sid for sid in sorted(self.shifts)
            if len(self.eligible[sid]) < self.shifts[sid].required_staff
        )
        if short:
            return self.report(ProofKind.CAPACITY_BOUND)
        demand = sum(s.required_staff * s.slot.duration_min for s in self.shifts.values())
        if sum(self.budget.values()) < demand:
            return self.report(ProofKind.CAPACITY_BOUND)
        return None


class _OutOfTime(Exception):
    pass


class _OutOfNodes(Exception):
    pass


def generate_schedule(
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    config: SolverConfig = SolverConfig(),
) -> Schedule | InfeasibilityReport:
    """Produce a feasible weekly schedule, or a certificate that none exists.

    Within the exact size bound the verdict is complete: a schedule is
    returned iff one exists, otherwise the report's proof is Exhausted.
    Beyond the bound the search is heuristic and may return a capacity-bound
    certificate or raise TimeLimitExceeded.  Output is deterministic for a
    fixed seed.
    """
    solver = _Solver(roster, shifts, config)
    deadline = _Deadline(config.time_limit_ms)
    exact = (
        len(roster) <= config.exact_size_bound.max_tas
        and len(shifts) <= config.exact_size_bound.max_shifts
    )

    try:
        if exact:
            staff = solver.solve_exact(deadline)
            if staff is None:
                return solver.report(ProofKind.EXHAUSTED)
        else:
            proof = solver.capacity_proof()
            if proof is not None:
                return proof
            staff = solver.solve_heuristic(deadline)
            if staff is None:
                return solver.report(ProofKind.EXHAUSTED)
    except _OutOfTime:
        partial = Schedule.of(
            sorted(
                (t, sid) for sid, combo in solver.best_partial.items() for t in combo
            ),
            config.week_anchor,
        )
        raise TimeLimitExceeded(partial, len(solver.best_partial), len(shifts)) from None

    staff = solver.improve_balance(staff)
    schedule = Schedule.of(
        sorted((t, sid) for sid, combo in staff.items() for t in combo),
        config.week_anchor,
    )
    leftover = check_schedule(
        schedule, roster, shifts, allow_overcover=config.overcover_allowed
    )
    if leftover:  # internal error guard: the search must only emit feasible output
        raise AssertionError(f"solver produced an invalid schedule: {leftover[0]}")
    return schedule


def find_replacement_candidates(
    schedule: Schedule,
    roster: Sequence[TeachingAssistant],
    shifts: Sequence[Shift],
    target: str,
    excluded: Iterable[str] = (),
) -> list[str]:
    """Every TA who could take the target shift without breaking the schedule,
    least-loaded first (ties by TA id)."""
    tas = index_by_id(roster, "TA")
    shift_map = index_by_id(shifts, "shift")
    if target not in shift_map:
        raise UnknownIdError(f"unknown shift {target!r}")
    shift = shift_map[target]
    excluded = set(excluded)

    by_ta = schedule.by_ta()
    current_staff = set(schedule.by_shift().get(target, []))
    load: dict[str, int] = {}
    for ta_id, shift_ids in by_ta.items():
        for sid in shift_ids:
            if sid not in shift_map:
                raise UnknownIdError(f"schedule references unknown shift {sid!r}")
        load[ta_id] = sum(shift_map[sid].slot.duration_min for sid in shift_ids)

    out = []
    for ta in roster:
        if ta.id in excluded or ta.id in current_staff:
            continue
        if not availability_covers(ta.availability, shift.slot):
            continue
        assigned_slots = [shift_map[sid].slot for sid in by_ta.get(ta.id, [])]
        if any(shift.slot.overlaps(s) for s in assigned_slots):
            continue
        if load.get(ta.id, 0) + shift.slot.duration_min > ta.profile.regular_minutes:
            continue
        out.append(ta.id)
    out.sort(key=lambda t: (load.get(t, 0), t))
    return out
