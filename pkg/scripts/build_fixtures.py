"""Regenerate the shipped instances and the oracle golden fronts.

Tiny instances use a scaled-down robot (capacity 3 fruit of 4 kg, 2.4 kJ
battery) so that routes hit both capacity and swap decisions with only a
handful of visits, and yields of 1 or 2 fruit so that granularity 2 covers
every integer split. tiny1 and tiny2 have battery swaps on their fronts.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from saba.instance import GeneratorSpec, PhysicalParams, generate_instance, validate_instance, write_instance
from saba.oracle import OracleSpec, enumerate_pareto, write_golden

DATA = Path(__file__).resolve().parents[1] / "src" / "saba" / "data"

TINY_PARAMS = PhysicalParams(
    load_capacity_fruits=3,
    fruit_weight_kg=4.0,
    pick_time_s=3.0,
    battery_kJ=2.4,
    swap_threshold_kJ=1.4,
    swap_time_s=20.0,
    pick_energy_kJ=0.1,
)

# name -> (rows, cols, tasks, seed)
TINY = {
    "tiny1": (5, 6, 4, 139),
    "tiny2": (4, 8, 5, 180),
    "tiny3": (3, 8, 4, 18),
    "tiny4": (4, 6, 5, 84),
    "tiny5": (3, 6, 4, 18),
}

# name -> (rows, cols, tasks, robots, seed); 20 to 35 tasks per robot, so most
# routes need at least one battery swap
SMALL = {
    "small40": (10, 20, 40, 2, 101),
    "small60": (12, 25, 60, 2, 102),
    "small80": (15, 30, 80, 3, 103),
    "small100": (20, 30, 100, 3, 104),
    "small140": (30, 50, 140, 4, 105),
}


def main() -> int:
    only = set(sys.argv[1:])
    for name, (rows, cols, n, seed) in TINY.items():
        if only and name not in only:
            continue
        spec = GeneratorSpec(rows=rows, cols=cols, task_count=n, robot_count=2, yield_range=(1, 2), seed=seed, name=name, params=TINY_PARAMS)
        inst = generate_instance(spec)
        assert not validate_instance(inst), validate_instance(inst)
        write_instance(inst, DATA / "instances" / f"{name}.json")
        t0 = time.perf_counter()
        front = enumerate_pareto(inst, OracleSpec(max_tasks=5, split_granularity=2))
        write_golden(front, DATA / "golden" / f"{name}.csv")
        yields = [t.yield_fruits for t in inst.tasks]
        print(f"{name}: yields={yields} front={len(front)} oracle={time.perf_counter() - t0:.1f}s")
    for name, (rows, cols, n, r, seed) in SMALL.items():
        if only and name not in only:
            continue
        inst = generate_instance(GeneratorSpec(rows=rows, cols=cols, task_count=n, robot_count=r, seed=seed, name=name))
        assert not validate_instance(inst)
        write_instance(inst, DATA / "instances" / f"{name}.json")
        print(f"{name}: n={inst.n} r={inst.robot_count}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
