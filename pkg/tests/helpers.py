"""Shared builders and hypothesis strategies for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from hypothesis import strategies as st

import saba
from saba.instance import GeneratorSpec, Instance, PhysicalParams, TaskNode, generate_instance, read_instance
from saba.schedule import LOAD_VISIT, Solution, repair_depot_markers

DATA = Path(saba.__file__).parent / "data"
TINY = [f"tiny{k}" for k in range(1, 6)]
SMALL = ["small40", "small60", "small80", "small100", "small140"]


def shipped(name: str) -> Instance:
    return read_instance(DATA / "instances" / f"{name}.json")


def matrix_instance(dist, yields, robots=1, params=None, name="hand") -> Instance:
    """Instance from an explicit (depot-first) distance matrix; task ids start at 2."""
    tasks = tuple(TaskNode(k + 2, q, 0, float(k)) for k, q in enumerate(yields))
    return Instance(name, tasks, robots, np.asarray(dist, dtype=float), params or PhysicalParams())


def worked_example() -> Instance:
    # depot->2 = 10 m, 2->3 = 5 m, 3->depot = 12 m
    return matrix_instance([[0, 10, 12], [10, 0, 5], [12, 5, 0]], [20, 30], name="worked")


@st.composite
def instances(draw, max_tasks: int = 10, max_robots: int = 3):
    """Small generated instances; the battery is often tight enough to force swaps."""
    rows = draw(st.integers(1, 5))
    cols = draw(st.integers(1, 6))
    n = draw(st.integers(1, min(max_tasks, rows * cols)))
    r = draw(st.integers(1, max_robots))
    battery = draw(st.sampled_from([432.0, 60.0, 30.0, 20.0]))
    capacity = draw(st.sampled_from([300, 100, 60]))
    params = PhysicalParams(
        load_capacity_fruits=capacity,
        battery_kJ=battery,
        swap_threshold_kJ=battery * draw(st.sampled_from([0.2, 0.5])),
    )
    spec = GeneratorSpec(rows=rows, cols=cols, task_count=n, robot_count=r, seed=draw(st.integers(0, 2**16)), params=params)
    return generate_instance(spec)


@st.composite
def feasible_solutions(draw, inst: Instance):
    """Random split assignment, random orders and random load visits, then marker repair."""
    r = inst.robot_count
    Q = inst.params.load_capacity_fruits
    seqs: list[list] = [[] for _ in range(r)]
    for t in inst.tasks:
        parts = draw(st.integers(1, min(3, t.yield_fruits)))
        cuts = sorted(draw(st.lists(st.integers(1, t.yield_fruits - 1), min_size=parts - 1, max_size=parts - 1, unique=True))) if parts > 1 else []
        bounds = [0] + cuts + [t.yield_fruits]
        for a, b in zip(bounds, bounds[1:]):
            count = b - a
            while count > 0:
                c = min(count, Q)
                seqs[draw(st.integers(0, r - 1))].append((t.id, c))
                count -= c
    out = []
    for seq in seqs:
        seq = draw(st.permutations(seq))
        tokens = []
        for item in seq:
            if tokens and draw(st.booleans()) and draw(st.booleans()):
                tokens.append(LOAD_VISIT)
            tokens.append(item)
        out.append(tokens)
    return repair_depot_markers(inst, out)


@st.composite
def instance_and_solution(draw, max_tasks: int = 10, max_robots: int = 3):
    inst = draw(instances(max_tasks, max_robots))
    return inst, draw(feasible_solutions(inst))


def demand(sol: Solution) -> dict[int, int]:
    return dict(sol.served())
