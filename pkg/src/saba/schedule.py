"""Solution encoding and exact evaluation of a schedule.

A robot route is a sequence of task ids interleaved with depot markers:
``1`` is a load-induced visit (unload only) and ``-1`` an energy-induced
visit (unload and battery swap). The stretch between two depot visits is a
cycle; the fruit picked at each task of each cycle lives in ``splits``.

Inside the solver routes are handled as *token lists*: ``(task, count)``
tuples for task visits and bare ints for depot markers.
"""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .instance import Instance

LOAD_VISIT = 1
ENERGY_VISIT = -1
ROBOT_DELIMITER = 0

# absolute slack for kJ / s comparisons
TOL = 1e-9

Item = tuple[int, int]
Token = Union[Item, int]


class MalformedSolutionError(ValueError):
    """The solution does not follow the encoding rules (as opposed to being infeasible)."""


class InstanceInfeasibleError(RuntimeError):
    """A single task visit cannot be served even from a full battery."""


class WorkMeter:
    """Counts simulated node visits; drives the deterministic search clock.

    Each routine charges per node in proportion to its measured cost, so
    that units track real time across different mixes of operations.
    """

    def __init__(self) -> None:
        self.units = 0

    def add(self, k: int) -> None:
        self.units += k


WORK = WorkMeter()
# units per node visited
COST_ROUTE, COST_REPAIR, COST_EVALUATE, COST_CYCLE = 2, 3, 12, 1


# ---------------------------------------------------------------- encoding


@dataclass
class Solution:
    routes: list[list[int]]
    splits: dict[tuple[int, int, int], int] = field(default_factory=dict)

    @classmethod
    def from_tokens(cls, per_robot: Sequence[Sequence[Token]]) -> "Solution":
        routes: list[list[int]] = []
        splits: dict[tuple[int, int, int], int] = {}
        for k, tokens in enumerate(per_robot):
            route: list[int] = []
            cycle = 0
            for tok in tokens:
                if isinstance(tok, tuple):
                    task, count = tok
                    route.append(task)
                    if (k, cycle, task) in splits:
                        raise MalformedSolutionError(f"task {task} repeated in robot {k} cycle {cycle}")
                    splits[(k, cycle, task)] = count
                else:
                    route.append(tok)
                    cycle += 1
            routes.append(route)
        return cls(routes, splits)

    def tokens(self, robot: int) -> list[Token]:
        out: list[Token] = []
        cycle = 0
        splits = self.splits
        for node in self.routes[robot]:
            if node in (LOAD_VISIT, ENERGY_VISIT):
                out.append(node)
                cycle += 1
            else:
                out.append((node, splits[(robot, cycle, node)]))
        return out

    def all_tokens(self) -> list[list[Token]]:
        return [self.tokens(k) for k in range(len(self.routes))]

    def flat(self) -> list[int]:
        """Single integer vector with ``0`` between robots."""
        out: list[int] = []
        for k, route in enumerate(self.routes):
            if k:
                out.append(ROBOT_DELIMITER)
            out.extend(route)
        return out

    def served(self) -> Counter:
        c: Counter = Counter()
        for (_, _, task), count in self.splits.items():
            c[task] += count
        return c

    def copy(self) -> "Solution":
        return Solution([list(r) for r in self.routes], dict(self.splits))


def items_of(tokens: Iterable[Token]) -> list[Item]:
    return [t for t in tokens if isinstance(t, tuple)]


def split_cycles(tokens: Sequence[Token]) -> tuple[list[list[Item]], list[int]]:
    """Cut a token list into cycles; second value holds the marker ending each cycle (0 = end)."""
    cycles: list[list[Item]] = []
    ends: list[int] = []
    cur: list[Item] = []
    for tok in tokens:
        if isinstance(tok, tuple):
            cur.append(tok)
        else:
            cycles.append(cur)
            ends.append(tok)
            cur = []
    if cur or not cycles:
        cycles.append(cur)
        ends.append(0)
    if cycles == [[]]:
        return [], []
    return cycles, ends


def join_cycles(cycles: Iterable[Sequence[Item]], marker: int = LOAD_VISIT) -> list[Token]:
    """Concatenate cycles with a depot marker between consecutive non-empty ones."""
    out: list[Token] = []
    for cyc in cycles:
        if not cyc:
            continue
        if out:
            out.append(marker)
        out.extend(cyc)
    return out


@dataclass(frozen=True)
class CycleView:
    robot: int
    ordinal: int
    task_sequence: tuple[int, ...]
    terminator: str  # "load-visit" | "energy-visit" | "end-of-route"
    fruit_counts: tuple[int, ...]

    @property
    def items(self) -> list[Item]:
        return list(zip(self.task_sequence, self.fruit_counts))


_TERMINATORS = {LOAD_VISIT: "load-visit", ENERGY_VISIT: "energy-visit", 0: "end-of-route"}


def decompose_cycles(sol: Solution, robot: int) -> list[CycleView]:
    cycles, ends = split_cycles(sol.tokens(robot))
    return [
        CycleView(
            robot=robot,
            ordinal=s,
            task_sequence=tuple(t for t, _ in cyc),
            terminator=_TERMINATORS[end],
            fruit_counts=tuple(c for _, c in cyc),
        )
        for s, (cyc, end) in enumerate(zip(cycles, ends))
    ]


def check_structure(inst: Instance, sol: Solution) -> None:
    """Raise MalformedSolutionError unless ``sol`` follows the encoding rules."""
    if len(sol.routes) != inst.robot_count:
        raise MalformedSolutionError(f"{len(sol.routes)} routes for {inst.robot_count} robots")
    seen = set()
    for k, route in enumerate(sol.routes):
        cycle = 0
        in_cycle: set[int] = set()
        prev_marker = True
        for node in route:
            if node in (LOAD_VISIT, ENERGY_VISIT):
                if prev_marker:
                    raise MalformedSolutionError(f"robot {k}: empty cycle before marker {node}")
                cycle += 1
                in_cycle = set()
                prev_marker = True
                continue
            if not inst.has_task(node):
                raise MalformedSolutionError(f"robot {k}: unknown task id {node}")
            if node in in_cycle:
                raise MalformedSolutionError(f"robot {k}: task {node} twice in cycle {cycle}")
            in_cycle.add(node)
            key = (k, cycle, node)
            if key not in sol.splits:
                raise MalformedSolutionError(f"missing split entry {key}")
            count = sol.splits[key]
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                raise MalformedSolutionError(f"split {key} must be a positive integer, got {count!r}")
            seen.add(key)
            prev_marker = False
        if route and prev_marker:
            raise MalformedSolutionError(f"robot {k}: route ends with a depot marker")
    extra = set(sol.splits) - seen
    if extra:
        raise MalformedSolutionError(f"split entries without a route visit: {sorted(extra)[:5]}")


# ---------------------------------------------------------------- fast path


@dataclass(frozen=True)
class RouteCost:
    time: float
    energy: float
    battery: float
    feasible: bool


def visit_need(inst: Instance, task: int, count: int) -> float:
    """Battery needed to leave the depot empty, serve ``count`` fruit at ``task`` and return."""
    p = inst.params
    k = p.energy_per_kg_m
    d = inst.dist(0, task)
    return d * p.empty_weight_kg * k + count * p.pick_energy_kJ + d * (p.empty_weight_kg + (count) * p.fruit_weight_kg) * k


def route_cost(inst: Instance, tokens: Sequence[Token], battery: float | None = None) -> RouteCost:
    """Completion time, transport energy and final battery of one robot route.

    A trailing marker is allowed and means the route ends with that depot
    visit (a trailing ``-1`` includes the swap). Feasibility here covers
    battery >= 0 and load <= Q only.
    """
    p = inst.params
    dist = inst._rows
    index = inst._index
    kk = p.energy_per_kg_m
    W, wa, V = p.empty_weight_kg, p.fruit_weight_kg, p.speed_mps
    tpick, epick, Q = p.pick_time_s, p.pick_energy_kJ, p.load_capacity_fruits
    B = p.battery_kJ if battery is None else battery
    ok = True
    time = energy = 0.0
    travel = pick = e_cyc = 0.0
    L = 0
    cur = 0
    n_tok = 0
    for tok in tokens:
        n_tok += 1
        if isinstance(tok, tuple):
            task, count = tok
            j = index[task]
            d = dist[cur][j]
            e = d * (W + L * wa) * kk
            travel += d / V
            e_cyc += e
            B -= e
            if B < -TOL:
                ok = False
            pick += tpick * count
            B -= count * epick
            L += count
            if L > Q:
                ok = False
            cur = j
        else:
            d = dist[cur][0]
            e = d * (W + L * wa) * kk
            travel += d / V
            e_cyc += e
            B -= e
            if B < -TOL:
                ok = False
            swap = 0.0
            if tok == ENERGY_VISIT:
                swap = p.swap_time_s
                B = p.battery_kJ
            time += travel + pick + swap
            energy += e_cyc
            travel = pick = e_cyc = 0.0
            L = 0
            cur = 0
    if cur != 0:
        d = dist[cur][0]
        e = d * (W + L * wa) * kk
        travel += d / V
        e_cyc += e
        B -= e
        if B < -TOL:
            ok = False
        time += travel + pick
        energy += e_cyc
    WORK.add(COST_ROUTE * (n_tok + 1))
    return RouteCost(time, energy, B, ok)


def repair_route(inst: Instance, tokens: Sequence[Token], battery: float | None = None) -> list[Token]:
    """Place depot visits on one robot's route.

    Every marker in ``tokens`` is a planned depot visit; more are added when
    the next visit would overflow capacity, repeat a task inside the cycle or
    leave too little battery to get back. At each depot visit a swap (``-1``)
    happens when the battery is at or below the threshold, or when it cannot
    cover the next visit's round trip.
    """
    p = inst.params
    dist = inst._rows
    index = inst._index
    kk = p.energy_per_kg_m
    W, wa = p.empty_weight_kg, p.fruit_weight_kg
    epick, Q, Bc, Bth = p.pick_energy_kJ, p.load_capacity_fruits, p.battery_kJ, p.swap_threshold_kJ
    B = Bc if battery is None else battery
    out: list[Token] = []
    L = 0
    cur = 0
    in_cycle: set[int] = set()
    want_break = False
    for tok in tokens:
        if not isinstance(tok, tuple):
            want_break = True
            continue
        task, count = tok
        if count > Q:
            raise InstanceInfeasibleError(f"visit of {count} fruit at task {task} exceeds capacity {Q}")
        j = index[task]
        back = dist[j][0]
        if cur != 0:
            brk = want_break or L + count > Q or task in in_cycle
            if not brk:
                need = dist[cur][j] * (W + L * wa) * kk + count * epick + back * (W + (L + count) * wa) * kk
                brk = B < need
            if brk:
                B -= dist[cur][0] * (W + L * wa) * kk
                start_need = dist[0][j] * W * kk + count * epick + back * (W + count * wa) * kk
                if B <= Bth + TOL or B < start_need:
                    out.append(ENERGY_VISIT)
                    B = Bc
                else:
                    out.append(LOAD_VISIT)
                L = 0
                cur = 0
                in_cycle = set()
        if cur == 0:
            start_need = dist[0][j] * W * kk + count * epick + back * (W + count * wa) * kk
            if B < start_need:
                if B >= Bc:
                    raise InstanceInfeasibleError(
                        f"task {task} with {count} fruit needs {start_need:.3f} kJ from a full battery"
                    )
                # only reachable with a partial starting battery
                raise InstanceInfeasibleError(f"starting battery {B:.3f} kJ cannot reach task {task}")
        B -= dist[cur][j] * (W + L * wa) * kk + count * epick
        L += count
        cur = j
        in_cycle.add(task)
        want_break = False
        out.append(tok)
    WORK.add(COST_REPAIR * (len(out) + 1))
    return out


def repair_depot_markers(inst: Instance, sequences: Sequence[Sequence[Token]]) -> Solution:
    """Build a feasible solution from per-robot visit sequences (markers optional)."""
    return Solution.from_tokens([repair_route(inst, seq) for seq in sequences])


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance for minimization."""
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


# ---------------------------------------------------------------- full evaluation


@dataclass
class CycleReport:
    ordinal: int
    terminator: str
    travel_s: float
    pick_s: float
    swap_s: float
    cycle_time_s: float
    transport_kJ: float
    service_kJ: float
    battery_start_kJ: float
    battery_on_return_kJ: float
    swapped: bool
    forced_swap: bool = False


@dataclass
class RobotReport:
    completion_time_s: float
    transport_kJ: float
    cycles: list[CycleReport]


@dataclass
class EvaluationReport:
    makespan_s: float
    transport_energy_kJ: float
    per_robot: list[RobotReport]
    battery_trace: list[list[tuple[int, float, int]]]
    feasible: bool
    violations: list[str]
    bottleneck: int

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.makespan_s, self.transport_energy_kJ)

    def to_dict(self) -> dict:
        return {
            "makespan_s": self.makespan_s,
            "transport_energy_kJ": self.transport_energy_kJ,
            "feasible": self.feasible,
            "violations": list(self.violations),
            "bottleneck": self.bottleneck,
            "per_robot": [
                {
                    "completion_time_s": r.completion_time_s,
                    "transport_kJ": r.transport_kJ,
                    "cycles": [vars(c) for c in r.cycles],
                }
                for r in self.per_robot
            ],
            "battery_trace": [[list(x) for x in tr] for tr in self.battery_trace],
        }


def evaluate(inst: Instance, sol: Solution) -> EvaluationReport:
    check_structure(inst, sol)
    p = inst.params
    kk = p.energy_per_kg_m
    violations: list[str] = []
    per_robot: list[RobotReport] = []
    traces: list[list[tuple[int, float, int]]] = []

    for k in range(inst.robot_count):
        cycles, ends = split_cycles(sol.tokens(k))
        B = p.battery_kJ
        L = 0
        cur = 0
        trace: list[tuple[int, float, int]] = []
        reports: list[CycleReport] = []
        robot_time = robot_energy = 0.0
        for s, (cyc, end) in enumerate(zip(cycles, ends)):
            start_B = B
            travel = pick = transport = service = 0.0
            for task, count in cyc:
                d = inst.dist(cur, task)
                e = d * (p.empty_weight_kg + L * p.fruit_weight_kg) * kk
                travel += d / p.speed_mps
                transport += e
                B -= e
                if B < -TOL:
                    violations.append(f"robot {k} cycle {s}: battery {B:.6f} kJ on arrival at task {task}")
                pick += p.pick_time_s * count
                B -= count * p.pick_energy_kJ
                service += count * p.pick_energy_kJ
                L += count
                if L > p.load_capacity_fruits:
                    violations.append(f"robot {k} cycle {s}: load {L} exceeds capacity at task {task}")
                trace.append((task, B + count * p.pick_energy_kJ, L))
                cur = task
            d = inst.dist(cur, 0)
            e = d * (p.empty_weight_kg + L * p.fruit_weight_kg) * kk
            travel += d / p.speed_mps
            transport += e
            B -= e
            if B < -TOL:
                violations.append(f"robot {k} cycle {s}: battery {B:.6f} kJ on return to depot")
            on_return = B
            trace.append((end, B, 0))
            L = 0
            cur = 0
            swap = 0.0
            forced = False
            if end == ENERGY_VISIT:
                if B > p.swap_threshold_kJ + TOL:
                    nxt = cycles[s + 1][0] if s + 1 < len(cycles) else None
                    if nxt is not None and B < visit_need(inst, *nxt) + TOL:
                        forced = True
                    else:
                        violations.append(
                            f"robot {k} cycle {s}: swap above threshold ({B:.3f} kJ > {p.swap_threshold_kJ} kJ)"
                        )
                swap = p.swap_time_s
                B = p.battery_kJ
            elif end == LOAD_VISIT and B < p.swap_threshold_kJ - TOL:
                violations.append(
                    f"robot {k} cycle {s}: depot visit at {B:.3f} kJ below threshold without swap"
                )
            t_s = travel + pick + swap
            robot_time += t_s
            robot_energy += transport
            reports.append(
                CycleReport(
                    ordinal=s,
                    terminator=_TERMINATORS[end],
                    travel_s=travel,
                    pick_s=pick,
                    swap_s=swap,
                    cycle_time_s=t_s,
                    transport_kJ=transport,
                    service_kJ=service,
                    battery_start_kJ=start_B,
                    battery_on_return_kJ=on_return,
                    swapped=end == ENERGY_VISIT,
                    forced_swap=forced,
                )
            )
        WORK.add(COST_EVALUATE * (len(sol.routes[k]) + 1))
        per_robot.append(RobotReport(robot_time, robot_energy, reports))
        traces.append(trace)

    served = sol.served()
    for t in inst.tasks:
        if served.get(t.id, 0) != t.yield_fruits:
            violations.append(f"task {t.id}: served {served.get(t.id, 0)} of {t.yield_fruits} fruit")

    times = [r.completion_time_s for r in per_robot]
    makespan = max(times, default=0.0)
    bottleneck = times.index(makespan) if times else 0
    energy = 0.0
    for r in per_robot:
        energy += r.transport_kJ
    return EvaluationReport(
        makespan_s=makespan,
        transport_energy_kJ=energy,
        per_robot=per_robot,
        battery_trace=traces,
        feasible=not violations,
        violations=violations,
        bottleneck=bottleneck,
    )


# ---------------------------------------------------------------- file formats


def solution_to_dict(sol: Solution) -> dict:
    return {
        "routes": [list(r) for r in sol.routes],
        "splits": [
            {"robot": k, "cycle": s, "task": t, "count": c} for (k, s, t), c in sorted(sol.splits.items())
        ],
    }


def solution_from_dict(data: dict) -> Solution:
    try:
        routes = [[int(x) for x in r] for r in data["routes"]]
        splits = {(int(e["robot"]), int(e["cycle"]), int(e["task"])): int(e["count"]) for e in data["splits"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSolutionError(f"malformed solution file: {exc}") from exc
    return Solution(routes, splits)


def write_solution(sol: Solution, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(solution_to_dict(sol)) + "\n", encoding="utf-8")
    return path


def read_solution(path: str | Path) -> Solution:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedSolutionError(f"{path}: {exc}") from exc
    return solution_from_dict(data)


def gantt_rows(report: EvaluationReport) -> list[tuple[int, int, float, float, str]]:
    rows = []
    for k, robot in enumerate(report.per_robot):
        t = 0.0
        for c in robot.cycles:
            for kind, dur in (("travel", c.travel_s), ("pick", c.pick_s), ("swap", c.swap_s)):
                if dur > 0:
                    rows.append((k, c.ordinal, t, t + dur, kind))
                    t += dur
    return rows


def gantt_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    buf.write("robot,cycle,start_s,end_s,kind\n")
    for k, s, a, b, kind in gantt_rows(report):
        buf.write(f"{k},{s},{a!r},{b!r},{kind}\n")
    return buf.getvalue()
