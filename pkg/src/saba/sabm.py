"""Sequential anchoring and balancing: cycle reordering, anchor-and-replan, residual pooling."""

from __future__ import annotations

from collections import Counter
from typing import Callable, Sequence

import numpy as np

from .construct import deal_cycles, plan_cycles, two_opt
from .instance import Instance
from .schedule import (
    ENERGY_VISIT,
    TOL,
    Item,
    Solution,
    Token,
    evaluate,
    items_of,
    join_cycles,
    repair_route,
    route_cost,
    split_cycles,
    visit_need,
)

Tracer = Callable[[dict], None]


def _pool(tokens: Sequence[Token]) -> dict[int, int]:
    pool: Counter = Counter()
    for task, count in items_of(tokens):
        pool[task] += count
    return dict(pool)


def _last_marker(tokens: Sequence[Token], marker: int) -> int | None:
    for i in range(len(tokens) - 1, -1, -1):
        if tokens[i] == marker:
            return i
    return None


def _first_marker(tokens: Sequence[Token], marker: int) -> int | None:
    for i, tok in enumerate(tokens):
        if tok == marker:
            return i
    return None


def _disrupted_cycle(cycles: Sequence[Sequence[Item]], route: Sequence[Token]) -> int | None:
    """Index of the first planned cycle that repair cut with an energy visit."""
    bounds = []
    acc = 0
    for c in cycles:
        acc += len(c)
        bounds.append(acc)
    planned = set(bounds)
    seen = 0
    for tok in route:
        if isinstance(tok, tuple):
            seen += 1
        elif tok == ENERGY_VISIT and seen not in planned:
            for i, b in enumerate(bounds):
                if seen < b:
                    return i
    return None


def swap_still_legal(inst: Instance, anchored: Sequence[Token], nxt: Item | None) -> bool:
    """Whether the ``-1`` closing ``anchored`` stays legal when ``nxt`` is the next visit."""
    battery = route_cost(inst, anchored[:-1]).battery
    if battery <= inst.params.swap_threshold_kJ + TOL:
        return True
    return nxt is not None and battery < visit_need(inst, *nxt) + TOL


def csos_tokens(inst: Instance, tokens: Sequence[Token], battery: float | None = None) -> list[Token]:
    """Reorder the cycles of one route, then the tasks of the first cycle cut by a swap."""
    cycles, _ = split_cycles(tokens)
    if len(cycles) <= 1:
        return list(tokens)
    base = route_cost(inst, tokens, battery).time

    def time_of(order: Sequence[Sequence[Item]]) -> float:
        return route_cost(inst, repair_route(inst, join_cycles(order), battery), battery).time

    best = two_opt(cycles, time_of)
    route = repair_route(inst, join_cycles(best), battery)
    cut = _disrupted_cycle(best, route)
    if cut is not None and len(best[cut]) > 1:
        head, tail = best[:cut], best[cut + 1 :]
        best[cut] = two_opt(best[cut], lambda c: time_of(head + [c] + tail))
        route = repair_route(inst, join_cycles(best), battery)
    if route_cost(inst, route, battery).time > base + TOL:
        return list(tokens)
    return route


def sas_tokens(
    inst: Instance,
    tokens: Sequence[Token],
    rng: np.random.Generator,
    tracer: Tracer | None = None,
    robot: int = 0,
) -> list[Token]:
    anchored: list[Token] = []
    current = list(tokens)
    full = inst.params.battery_kJ
    while True:
        idx = _first_marker(current, ENERGY_VISIT)
        if idx is None:
            anchored.extend(current)
            break
        anchored.extend(current[: idx + 1])
        pool = _pool(current[idx + 1 :])
        if tracer:
            tracer({"step": "sas-anchor", "robot": robot, "anchored": list(anchored), "pool": pool})
        if not pool:
            break
        segment = repair_route(inst, join_cycles(plan_cycles(inst, pool, rng)), full)
        segment = csos_tokens(inst, segment, full)
        if not swap_still_legal(inst, anchored, segment[0]):
            # a forced swap loses its reason once the next visit changes; keep the old remainder
            anchored.extend(current[idx + 1 :])
            break
        current = segment
    if anchored and anchored[-1] == ENERGY_VISIT:
        anchored.pop()
    return anchored


def _with_routes(sol: Solution, new: dict[int, Sequence[Token]]) -> Solution:
    per_robot = [list(new[k]) if k in new else sol.tokens(k) for k in range(len(sol.routes))]
    return Solution.from_tokens(per_robot)


def csos(inst: Instance, sol: Solution, robot: int) -> Solution:
    return _with_routes(sol, {robot: csos_tokens(inst, sol.tokens(robot))})


def sas(inst: Instance, sol: Solution, robot: int, rng: np.random.Generator, tracer: Tracer | None = None) -> Solution:
    return _with_routes(sol, {robot: sas_tokens(inst, sol.tokens(robot), rng, tracer, robot)})


def rwbs(inst: Instance, sol: Solution, rng: np.random.Generator, tracer: Tracer | None = None) -> Solution:
    """Pool every robot's work after its last swap, re-plan it and hand it out longest-first."""
    fixed: list[list[Token]] = []
    fixed_times: list[float] = []
    pool: Counter = Counter()
    for k in range(len(sol.routes)):
        tokens = sol.tokens(k)
        idx = _last_marker(tokens, ENERGY_VISIT)
        head = tokens[: idx + 1] if idx is not None else []
        fixed.append(head)
        fixed_times.append(route_cost(inst, head).time)
        for task, count in items_of(tokens[len(head) :]):
            pool[task] += count
    if tracer:
        tracer({"step": "rwbs-pool", "pool": dict(pool), "fixed_makespans": fixed_times})
    cycles = plan_cycles(inst, dict(pool), rng) if pool else []
    dealt = deal_cycles(inst, cycles, base=fixed_times, longest_first=True)
    full = inst.params.battery_kJ
    routes = []
    for head, mine in zip(fixed, dealt):
        tail = repair_route(inst, join_cycles(mine), full) if mine else []
        route = head + tail
        if route and route[-1] == ENERGY_VISIT:
            route.pop()
        routes.append(route)
    return Solution.from_tokens(routes)


def _rerepair(inst: Instance, sol: Solution) -> Solution:
    return Solution.from_tokens([repair_route(inst, sol.tokens(k)) for k in range(len(sol.routes))])


def sabm(inst: Instance, sol: Solution, rng: np.random.Generator, tracer: Tracer | None = None) -> Solution:
    """CSOS and SAS on every robot, then one global RWBS pass."""
    streams = rng.spawn(len(sol.routes) + 1)
    out = sol
    for k in range(len(sol.routes)):
        out = csos(inst, out, k)
        out = sas(inst, out, k, streams[k], tracer)
    out = rwbs(inst, out, streams[-1], tracer)
    if not evaluate(inst, out).feasible:
        # a swap kept at an anchor can lose its justification once the tail is re-planned
        out = _rerepair(inst, out)
        if not evaluate(inst, out).feasible:
            return sol
    if tracer:
        before, after = evaluate(inst, sol), evaluate(inst, out)
        tracer({"step": "sabm", "before": list(before.objectives), "after": list(after.objectives)})
    return out
