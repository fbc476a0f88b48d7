"""Proportional splitting rebalancer: share the bottleneck's cheapest late cycle among robots."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .instance import Instance
from .schedule import (
    ENERGY_VISIT,
    LOAD_VISIT,
    Item,
    Solution,
    Token,
    evaluate,
    repair_route,
    split_cycles,
)

Tracer = Callable[[dict], None]


@dataclass(frozen=True)
class SplitPlan:
    donor: tuple[int, int]
    ratios: tuple[float, ...]
    fruit_allocations: tuple[tuple[Item, ...], ...]


def split_ratios(baselines: Sequence[float], donor_duration: float) -> list[float]:
    """Share of the donor cycle for each robot, proportional to its positive gap to the ideal makespan."""
    r = len(baselines)
    ideal = (sum(baselines) + donor_duration) / r
    gaps = [max(ideal - b, 0.0) for b in baselines]
    total = sum(gaps)
    if total <= 0:
        return [0.0] * r
    return [g / total for g in gaps]


def largest_remainder(count: int, ratios: Sequence[float]) -> list[int]:
    """Integer shares of ``count`` that follow ``ratios`` and sum exactly to ``count``."""
    raw = [count * w for w in ratios]
    base = [math.floor(x) for x in raw]
    left = count - sum(base)
    order = sorted(range(len(raw)), key=lambda k: (-(raw[k] - base[k]), k))
    for k in order[:left]:
        base[k] += 1
    return base


def plan_split(donor: tuple[int, int], items: Sequence[Item], ratios: Sequence[float]) -> SplitPlan:
    shares = {task: largest_remainder(count, ratios) for task, count in items}
    alloc = tuple(
        tuple((task, shares[task][k]) for task, _ in items if shares[task][k] > 0) for k in range(len(ratios))
    )
    return SplitPlan(donor=donor, ratios=tuple(ratios), fruit_allocations=alloc)


def _tokens_from_cycles(cycles: Sequence[Sequence[Item]], ends: Sequence[int]) -> list[Token]:
    out: list[Token] = []
    for cyc, end in zip(cycles, ends):
        out.extend(cyc)
        if end:
            out.append(end)
    if out and not isinstance(out[-1], tuple):
        out.pop()
    return out


def _repair_tail(inst: Instance, tokens: list[Token]) -> list[Token]:
    """Re-derive markers after the last swap only; everything up to it is kept verbatim."""
    idx = max((i for i, t in enumerate(tokens) if t == ENERGY_VISIT), default=-1)
    head, tail = tokens[: idx + 1], tokens[idx + 1 :]
    if not tail:
        return head[:-1] if head else head
    battery = inst.params.battery_kJ
    return head + repair_route(inst, tail, battery)


def psrm(inst: Instance, sol: Solution, tracer: Tracer | None = None) -> Solution:
    report = evaluate(inst, sol)
    r = inst.robot_count
    rb = report.bottleneck
    cycles, ends = split_cycles(sol.tokens(rb))
    last = max((s for s, e in enumerate(ends) if e == ENERGY_VISIT), default=-1)
    after = list(range(last + 1, len(cycles)))
    if not after:
        return sol
    cyc_reports = report.per_robot[rb].cycles
    donor = min(after, key=lambda s: (cyc_reports[s].transport_kJ, s))
    donor_items = cycles[donor]
    donor_time = cyc_reports[donor].cycle_time_s

    kept_cycles = cycles[:donor] + cycles[donor + 1 :]
    kept_ends = ends[:donor] + ends[donor + 1 :]
    routes = sol.all_tokens()
    routes[rb] = _repair_tail(inst, _tokens_from_cycles(kept_cycles, kept_ends))
    stripped = Solution.from_tokens(routes)
    baselines = [x.completion_time_s for x in evaluate(inst, stripped).per_robot]

    ratios = split_ratios(baselines, donor_time)
    if sum(ratios) == 0:
        return sol
    plan = plan_split((rb, donor), donor_items, ratios)
    for k in range(r):
        new = list(plan.fruit_allocations[k])
        if not new:
            continue
        base = routes[k]
        routes[k] = _repair_tail(inst, base + [LOAD_VISIT] + new if base else new)
    candidate = Solution.from_tokens(routes)
    cand_report = evaluate(inst, candidate)
    accepted = cand_report.feasible and cand_report.makespan_s < report.makespan_s
    if tracer:
        tracer(
            {
                "step": "psrm",
                "donor": list(plan.donor),
                "ratios": list(plan.ratios),
                "before": list(report.objectives),
                "after": list(cand_report.objectives),
                "accepted": accepted,
            }
        )
    return candidate if accepted else sol
