"""Greedy constructor shared by population initialization and the repair mechanisms.

Pipeline: visiting order for the task pool -> capacity packing with splits at
cycle boundaries -> nearest-neighbour ordering inside each cycle -> 2-opt on
each cycle -> cycles dealt to robots -> depot marker repair.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .instance import Instance
from .schedule import COST_CYCLE, WORK, Item, Solution, join_cycles, repair_route

MAX_2OPT_PASSES = 50


def pool_order(inst: Instance, tasks: Sequence[int], rng: np.random.Generator) -> list[int]:
    """Nearest-neighbour tour over ``tasks`` from a random starting task."""
    left = list(tasks)
    if len(left) <= 1:
        return left
    start = left.pop(int(rng.integers(len(left))))
    order = [start]
    rows = inst._rows
    index = inst._index
    cur = index[start]
    while left:
        drow = rows[cur]
        best = min(range(len(left)), key=lambda i: (drow[index[left[i]]], left[i]))
        nxt = left.pop(best)
        order.append(nxt)
        cur = index[nxt]
    return order


def pack(order: Sequence[int], demand: dict[int, int], capacity: int) -> list[list[Item]]:
    """Fill cycles up to ``capacity`` fruit in ``order``, splitting a task across the boundary."""
    cycles: list[list[Item]] = []
    cur: list[Item] = []
    room = capacity
    for task in order:
        left = demand[task]
        while left > 0:
            take = min(left, room)
            cur.append((task, take))
            left -= take
            room -= take
            if room == 0:
                cycles.append(cur)
                cur, room = [], capacity
    if cur:
        cycles.append(cur)
    return cycles


def cycle_energy(inst: Instance, items: Sequence[Item]) -> float:
    p = inst.params
    rows = inst._rows
    index = inst._index
    W, wa, kk = p.empty_weight_kg, p.fruit_weight_kg, p.energy_per_kg_m
    e = 0.0
    cur = 0
    L = 0
    for task, count in items:
        j = index[task]
        e += rows[cur][j] * (W + L * wa) * kk
        L += count
        cur = j
    WORK.add(COST_CYCLE * (len(items) + 1))
    return e + rows[cur][0] * (W + L * wa) * kk


def cycle_duration(inst: Instance, items: Sequence[Item]) -> float:
    """Travel plus picking time of a cycle run on its own."""
    p = inst.params
    rows = inst._rows
    index = inst._index
    d = 0.0
    cur = 0
    fruit = 0
    for task, count in items:
        j = index[task]
        d += rows[cur][j]
        fruit += count
        cur = j
    d += rows[cur][0]
    return d / p.speed_mps + fruit * p.pick_time_s


def nearest_neighbour(inst: Instance, items: Sequence[Item]) -> list[Item]:
    left = list(items)
    out: list[Item] = []
    rows = inst._rows
    index = inst._index
    cur = 0
    while left:
        drow = rows[cur]
        best = min(range(len(left)), key=lambda i: (drow[index[left[i][0]]], left[i][0]))
        it = left.pop(best)
        out.append(it)
        cur = index[it[0]]
    return out


def two_opt(seq: list, cost, max_passes: int = MAX_2OPT_PASSES) -> list:
    """First-improvement 2-opt by segment reversal; restarts after each accepted move."""
    best = list(seq)
    best_cost = cost(best)
    n = len(best)
    for _ in range(max_passes):
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                cand = best[:i] + best[i : j + 1][::-1] + best[j + 1 :]
                c = cost(cand)
                if c < best_cost - 1e-12:
                    best, best_cost = cand, c
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    return best


def improve_cycle(inst: Instance, items: Sequence[Item]) -> list[Item]:
    ordered = nearest_neighbour(inst, items)
    if len(ordered) < 3:
        # two tasks: both directions still differ in energy because of the load
        if len(ordered) == 2 and cycle_energy(inst, ordered[::-1]) < cycle_energy(inst, ordered):
            ordered = ordered[::-1]
        return ordered
    return two_opt(ordered, lambda c: cycle_energy(inst, c))


def plan_cycles(inst: Instance, pool: dict[int, int], rng: np.random.Generator) -> list[list[Item]]:
    """Pack a task pool (task -> fruit still to pick) into improved cycles."""
    tasks = sorted(t for t, q in pool.items() if q > 0)
    order = pool_order(inst, tasks, rng)
    cycles = pack(order, pool, inst.params.load_capacity_fruits)
    return [improve_cycle(inst, c) for c in cycles]


def deal_cycles(
    inst: Instance,
    cycles: Sequence[Sequence[Item]],
    base: Sequence[float] | None = None,
    longest_first: bool = False,
) -> list[list[list[Item]]]:
    """Hand cycles one by one to the robot with the least accumulated duration (ties: lowest index)."""
    r = inst.robot_count
    load = list(base) if base is not None else [0.0] * r
    out: list[list[list[Item]]] = [[] for _ in range(r)]
    durations = [cycle_duration(inst, c) for c in cycles]
    order = range(len(cycles))
    if longest_first:
        order = sorted(order, key=lambda i: (-durations[i], i))
    for i in order:
        k = min(range(r), key=lambda q: (load[q], q))
        out[k].append(list(cycles[i]))
        load[k] += durations[i]
    return out


def construct_solution(inst: Instance, rng: np.random.Generator) -> Solution:
    pool = {t.id: t.yield_fruits for t in inst.tasks}
    per_robot = deal_cycles(inst, plan_cycles(inst, pool, rng))
    return Solution.from_tokens([repair_route(inst, join_cycles(cs)) for cs in per_robot])
