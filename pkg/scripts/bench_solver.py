"""Solver timing sweep.

Times the complete search across random small instances bucketed by size,
then the course-scale planted instance, and prints one row per bucket.

    python3 scripts/bench_solver.py --instances 200 --seed 11
"""

import argparse
import random
import statistics
import time

from courseops.model import Schedule
from courseops.solver import SolverConfig, generate_schedule
from courseops.synth import course_scale_instance, small_instance


def bench_small(instances: int, seed: int) -> list[tuple[str, int, float, float, int]]:
    master = random.Random(seed)
    buckets: dict[tuple[int, int], list[tuple[float, bool]]] = {}
    for k in range(instances):
        roster, shifts = small_instance(random.Random(master.randrange(2**62)))
        key = (len(roster), len(shifts))
        t0 = time.perf_counter()
        result = generate_schedule(roster, shifts, SolverConfig(seed=k))
        elapsed = time.perf_counter() - t0
        buckets.setdefault(key, []).append((elapsed, isinstance(result, Schedule)))

    rows = []
    for (tas, shifts_n), samples in sorted(buckets.items()):
        times = [t for t, _ in samples]
        feasible = sum(1 for _, ok in samples if ok)
        rows.append(
            (
                f"{tas} TAs / {shifts_n} shifts",
                len(samples),
                statistics.median(times) * 1000,
                max(times) * 1000,
                feasible,
            )
        )
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    print(f"{'instance':<22} {'n':>4} {'median ms':>10} {'max ms':>8} {'feasible':>9}")
    for label, n, med, worst, feasible in bench_small(args.instances, args.seed):
        print(f"{label:<22} {n:>4} {med:>10.2f} {worst:>8.2f} {feasible:>9}")

    inst = course_scale_instance(seed=0)
    t0 = time.perf_counter()
    result = generate_schedule(inst.roster, inst.shifts, SolverConfig(seed=0))
    elapsed = time.perf_counter() - t0
    verdict = "feasible" if isinstance(result, Schedule) else "infeasible"
    print(
        f"\ncourse scale ({len(inst.roster)} TAs, {len(inst.shifts)} shifts): "
        f"{verdict} in {elapsed * 1000:.0f} ms"
    )


if __name__ == "__main__":
    main()
