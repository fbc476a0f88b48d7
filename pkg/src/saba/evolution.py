"""Time-budgeted evolutionary main loop with probabilistic SABM and final PSRM."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .construct import construct_solution, improve_cycle, two_opt, cycle_energy
from .instance import Instance
from .metrics import NormalizationBounds, hypervolume, nondominated
from .psrm import psrm
from .sabm import sabm
from .schedule import (
    WORK,
    EvaluationReport,
    Item,
    Solution,
    dominates,
    evaluate,
    join_cycles,
    repair_route,
    split_cycles,
)

# virtual seconds charged per simulated node visit by the "work" clock;
# set so that one virtual second costs less than one real second here
WORK_SECONDS_PER_UNIT = 4e-7
# flat charges for bookkeeping the node meter does not see
COST_VARY = 70
COST_PAIR = 1

Tracer = Callable[[dict], None]


@dataclass
class RunConfig:
    population_size: int = 30
    time_budget_s: float | None = None
    budget_factor: float = 0.5
    sabm_probability: float = 0.42
    seed: int = 0
    disable_sabm: bool = False
    disable_psrm: bool = False
    psrm_passes: int = 1
    clock: str = "wall"
    max_generations: int | None = None

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.time_budget_s is not None and not self.time_budget_s > 0:
            raise ValueError("time_budget_s must be positive")
        if not self.budget_factor > 0:
            raise ValueError("budget_factor must be positive")
        if not 0 <= self.sabm_probability <= 1:
            raise ValueError("sabm_probability must lie in [0, 1]")
        if self.psrm_passes < 0:
            raise ValueError("psrm_passes must be non-negative")
        if self.clock not in ("wall", "work"):
            raise ValueError(f"unknown clock {self.clock!r}")

    def budget_for(self, inst: Instance) -> float:
        if self.time_budget_s is not None:
            return self.time_budget_s
        return max(inst.n, 1) * self.budget_factor


@dataclass
class Individual:
    solution: Solution
    report: EvaluationReport

    @property
    def objectives(self) -> tuple[float, float]:
        return self.report.objectives


@dataclass
class Population:
    individuals: list[Individual]
    nondominated_set: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.nondominated_set:
            self.nondominated_set = nondominated_sort([i.objectives for i in self.individuals])[0] if self.individuals else []

    def front(self) -> list[Individual]:
        return [self.individuals[i] for i in self.nondominated_set]


class SearchClock:
    """Elapsed seconds, either real (``wall``) or derived from simulation work (``work``).

    The work clock makes a seeded run reproducible regardless of machine load.
    """

    def __init__(self, mode: str = "wall") -> None:
        self.mode = mode
        self._t0 = time.perf_counter()
        self._u0 = WORK.units

    def now(self) -> float:
        if self.mode == "work":
            return (WORK.units - self._u0) * WORK_SECONDS_PER_UNIT
        return time.perf_counter() - self._t0


# ---------------------------------------------------------------- selection


def nondominated_sort(objs: Sequence[Sequence[float]]) -> list[list[int]]:
    n = len(objs)
    dominated_by = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            if dominates(objs[p], objs[q]):
                dominated_by[p].append(q)
            elif dominates(objs[q], objs[p]):
                counts[p] += 1
        if counts[p] == 0:
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                counts[q] -= 1
                if counts[q] == 0:
                    nxt.append(q)
        i += 1
        fronts.append(sorted(nxt))
    return fronts[:-1]


def crowding_distance(objs: Sequence[Sequence[float]], front: Sequence[int]) -> dict[int, float]:
    dist = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: float("inf") for i in front}
    for m in range(2):
        ordered = sorted(front, key=lambda i: (objs[i][m], i))
        lo, hi = objs[ordered[0]][m], objs[ordered[-1]][m]
        dist[ordered[0]] = dist[ordered[-1]] = float("inf")
        if hi <= lo:
            continue
        for a, b, c in zip(ordered, ordered[1:], ordered[2:]):
            dist[b] += (objs[c][m] - objs[a][m]) / (hi - lo)
    return dist


def environmental_selection(cands: Sequence[Individual], size: int) -> Population:
    """NSGA-II truncation; objective duplicates are only used to fill up."""
    WORK.add(COST_PAIR * len(cands) ** 2)
    seen = set()
    unique, dups = [], []
    for ind in cands:
        key = ind.objectives
        (dups if key in seen else unique).append(ind)
        seen.add(key)
    chosen: list[Individual] = []
    for group in (unique, dups):
        if len(chosen) >= size:
            break
        objs = [g.objectives for g in group]
        for front in nondominated_sort(objs):
            room = size - len(chosen)
            if room <= 0:
                break
            if len(front) <= room:
                chosen.extend(group[i] for i in front)
            else:
                cd = crowding_distance(objs, front)
                best = sorted(front, key=lambda i: (-cd[i], i))[:room]
                chosen.extend(group[i] for i in sorted(best))
    return Population(chosen)


def _ranks(pop: Population) -> tuple[list[int], list[float]]:
    objs = [i.objectives for i in pop.individuals]
    rank = [0] * len(objs)
    crowd = [0.0] * len(objs)
    for r, front in enumerate(nondominated_sort(objs)):
        cd = crowding_distance(objs, front)
        for i in front:
            rank[i] = r
            crowd[i] = cd[i]
    return rank, crowd


# ---------------------------------------------------------------- variation

Plan = list[list[list[Item]]]


def _plan(sol: Solution) -> Plan:
    return [split_cycles(sol.tokens(k))[0] for k in range(len(sol.routes))]


def _cycle_refs(plan: Plan) -> list[tuple[int, int]]:
    return [(k, s) for k, cycles in enumerate(plan) for s in range(len(cycles))]


def _drop_empty(plan: Plan) -> Plan:
    return [[c for c in cycles if c] for cycles in plan]


def _put(cycle: list[Item], item: Item, pos: int, capacity: int) -> bool:
    """Insert a visit, merging with an existing visit of the same task; False if that would overflow."""
    for i, (task, count) in enumerate(cycle):
        if task == item[0]:
            if count + item[1] > capacity:
                return False
            cycle[i] = (task, count + item[1])
            return True
    cycle.insert(pos, item)
    return True


def op_relocate_cycle(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    refs = _cycle_refs(plan)
    if not refs:
        return False
    k, s = refs[int(rng.integers(len(refs)))]
    others = [q for q in range(len(plan)) if q != k] or [k]
    dest = others[int(rng.integers(len(others)))]
    cyc = plan[k].pop(s)
    plan[dest].insert(int(rng.integers(len(plan[dest]) + 1)), cyc)
    return True


def op_swap_tasks(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    refs = _cycle_refs(plan)
    if len(refs) < 2:
        return False
    a = refs[int(rng.integers(len(refs)))]
    pool = [x for x in refs if x[0] != a[0]] or [x for x in refs if x != a]
    b = pool[int(rng.integers(len(pool)))]
    ca, cb = plan[a[0]][a[1]], plan[b[0]][b[1]]
    i, j = int(rng.integers(len(ca))), int(rng.integers(len(cb)))
    ta, tb = ca[i], cb[j]
    if ta[0] == tb[0]:
        return False
    if any(t == tb[0] for t, _ in ca) or any(t == ta[0] for t, _ in cb):
        return False
    ca[i], cb[j] = tb, ta
    return True


def op_split_mutation(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    visits: dict[int, list[tuple[int, int, int]]] = {}
    for k, cycles in enumerate(plan):
        for s, cyc in enumerate(cycles):
            for i, (task, _) in enumerate(cyc):
                visits.setdefault(task, []).append((k, s, i))
    split = sorted(t for t, v in visits.items() if len(v) >= 2)
    if not split:
        return op_split_task(inst, plan, rng)
    task = split[int(rng.integers(len(split)))]
    where = visits[task]
    u, v = rng.choice(len(where), size=2, replace=False)
    (ku, su, iu), (kv, sv, iv) = where[int(u)], where[int(v)]
    have = plan[ku][su][iu][1]
    other = plan[kv][sv][iv][1]
    room = inst.params.load_capacity_fruits - other
    if room <= 0:
        return False
    amount = int(rng.integers(1, min(have, room) + 1))
    plan[kv][sv][iv] = (task, other + amount)
    if amount == have:
        plan[ku][su].pop(iu)
    else:
        plan[ku][su][iu] = (task, have - amount)
    return True


def op_split_task(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    refs = [(k, s, i) for k, cycles in enumerate(plan) for s, c in enumerate(cycles) for i, it in enumerate(c) if it[1] >= 2]
    if not refs:
        return False
    k, s, i = refs[int(rng.integers(len(refs)))]
    task, count = plan[k][s][i]
    amount = int(rng.integers(1, count))
    dest = int(rng.integers(len(plan)))
    slot = int(rng.integers(len(plan[dest]) + 1))
    plan[k][s][i] = (task, count - amount)
    if slot == len(plan[dest]) or any(t == task for t, _ in plan[dest][slot]):
        plan[dest].insert(slot, [(task, amount)])
    else:
        cyc = plan[dest][slot]
        cyc.insert(int(rng.integers(len(cyc) + 1)), (task, amount))
    return True


def op_relocate_task(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    refs = [(k, s, i) for k, cycles in enumerate(plan) for s, c in enumerate(cycles) for i in range(len(c))]
    if not refs:
        return False
    k, s, i = refs[int(rng.integers(len(refs)))]
    item = plan[k][s].pop(i)
    dest = int(rng.integers(len(plan)))
    slot = int(rng.integers(len(plan[dest]) + 1))
    if slot == len(plan[dest]):
        plan[dest].append([item])
        return True
    cyc = plan[dest][slot]
    if not _put(cyc, item, int(rng.integers(len(cyc) + 1)), inst.params.load_capacity_fruits):
        plan[k][s].insert(i, item)
        return False
    return True


def op_merge_cycles(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    robots = [k for k, cycles in enumerate(plan) if len(cycles) >= 2]
    if not robots:
        return False
    k = robots[int(rng.integers(len(robots)))]
    s = int(rng.integers(len(plan[k]) - 1))
    a, b = plan[k][s], plan[k][s + 1]
    merged = list(a)
    for item in b:
        if not _put(merged, item, len(merged), inst.params.load_capacity_fruits):
            return False
    plan[k][s : s + 2] = [improve_cycle(inst, merged)]
    return True


def op_two_opt(inst: Instance, plan: Plan, rng: np.random.Generator) -> bool:
    refs = [x for x in _cycle_refs(plan) if len(plan[x[0]][x[1]]) >= 2]
    if not refs:
        return False
    k, s = refs[int(rng.integers(len(refs)))]
    cyc = plan[k][s]
    better = two_opt(cyc, lambda c: cycle_energy(inst, c))
    if better == cyc:
        i, j = sorted(rng.choice(len(cyc), size=2, replace=False).tolist())
        better = cyc[:i] + cyc[i : j + 1][::-1] + cyc[j + 1 :]
    plan[k][s] = better
    return True


OPERATORS = (
    op_relocate_cycle,
    op_swap_tasks,
    op_split_mutation,
    op_two_opt,
    op_relocate_task,
    op_split_task,
    op_merge_cycles,
)


def vary(inst: Instance, sol: Solution, rng: np.random.Generator) -> Solution:
    plan = _plan(sol)
    for _ in range(4):
        op = OPERATORS[int(rng.integers(len(OPERATORS)))]
        if op(inst, plan, rng):
            break
    plan = _drop_empty(plan)
    WORK.add(COST_VARY)
    return Solution.from_tokens([repair_route(inst, join_cycles(cycles)) for cycles in plan])


# ---------------------------------------------------------------- main loop


def _individual(inst: Instance, sol: Solution) -> Individual:
    return Individual(sol, evaluate(inst, sol))


def initialize_population(inst: Instance, cfg: RunConfig, rng: np.random.Generator | None = None) -> Population:
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    streams = rng.spawn(cfg.population_size)
    return Population([_individual(inst, construct_solution(inst, s)) for s in streams])


def evolve_step(pop: Population, inst: Instance, cfg: RunConfig, rng: np.random.Generator) -> Population:
    rank, crowd = _ranks(pop)
    n = len(pop.individuals)
    offspring = []
    for _ in range(cfg.population_size):
        a, b = rng.integers(n, size=2)
        a, b = int(a), int(b)
        better = a if (rank[a], -crowd[a], a) <= (rank[b], -crowd[b], b) else b
        child = vary(inst, pop.individuals[better].solution, rng)
        ind = _individual(inst, child)
        if ind.report.feasible:
            offspring.append(ind)
    return environmental_selection(pop.individuals + offspring, cfg.population_size)


def _apply_sabm(
    inst: Instance, pop: Population, which: Sequence[int], rng: np.random.Generator, tracer: Tracer | None
) -> Population:
    members = list(pop.individuals)
    displaced = []
    for i in which:
        cand = _individual(inst, sabm(inst, members[i].solution, rng, tracer))
        if cand.report.feasible and not dominates(members[i].objectives, cand.objectives):
            displaced.append(members[i])
            members[i] = cand
    if not displaced:
        return Population(members)
    # a lateral move may drop a point no other member covers; let truncation decide
    return environmental_selection(members + displaced, len(members))


@dataclass
class RunResult:
    population: Population
    front: list[Individual]
    log: list[dict]
    generations: int
    elapsed_s: float
    wall_s: float


def run(inst: Instance, cfg: RunConfig, tracer: Tracer | None = None) -> RunResult:
    wall0 = time.perf_counter()
    clock = SearchClock(cfg.clock)
    budget = cfg.budget_for(inst)
    init_rng, evo_rng, gate_rng, sabm_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(4))
    use_sabm = not cfg.disable_sabm

    pop = initialize_population(inst, cfg, init_rng)
    # fixed bounds for the progress log: ideal corner at zero, initial worst values as the far edge
    init = np.array([i.objectives for i in pop.individuals])
    hi = init.max(axis=0)
    bounds = NormalizationBounds(0.0, float(hi[0]) or 1.0, 0.0, float(hi[1]) or 1.0)
    archive: list[tuple[float, float]] = nondominated(init.tolist())

    log: list[dict] = []
    it = 0
    now = 0.0
    while now <= budget:
        if it == 0 and use_sabm:
            pop = _apply_sabm(inst, pop, range(len(pop.individuals)), sabm_rng, tracer)
        pop = evolve_step(pop, inst, cfg, evo_rng)
        if gate_rng.random() <= cfg.sabm_probability and use_sabm:
            pop = _apply_sabm(inst, pop, pop.nondominated_set, sabm_rng, tracer)
        archive = nondominated(archive + [i.objectives for i in pop.individuals])
        it += 1
        now = clock.now()
        iter_time = now / it
        front = pop.front()
        log.append(
            {
                "generation": it,
                "elapsed_s": now,
                "front_size": len(front),
                "best_makespan": min(f.objectives[0] for f in front),
                "best_energy": min(f.objectives[1] for f in front),
                "hv_archive": hypervolume(archive, bounds),
            }
        )
        if now + iter_time >= budget or (cfg.max_generations is not None and it >= cfg.max_generations):
            break

    extra: list[Individual] = []
    if not cfg.disable_psrm and cfg.psrm_passes > 0:
        for ind in pop.front():
            sol = ind.solution
            for _ in range(cfg.psrm_passes):
                nxt = psrm(inst, sol, tracer)
                if nxt is sol:
                    break
                sol = nxt
            if sol is not ind.solution:
                extra.append(_individual(inst, sol))
    union = pop.individuals + extra
    objs = [i.objectives for i in union]
    first = nondominated_sort(objs)[0]
    seen = set()
    front = []
    for i in sorted(first, key=lambda i: (objs[i], i)):
        if objs[i] not in seen:
            seen.add(objs[i])
            front.append(union[i])
    final = environmental_selection(union, cfg.population_size) if extra else pop
    return RunResult(
        population=final,
        front=front,
        log=log,
        generations=it,
        elapsed_s=clock.now(),
        wall_s=time.perf_counter() - wall0,
    )


def select_default_solution(points: Sequence[Sequence[float]]) -> int:
    """Index of the knee point of a 2-D minimization front.

    Objectives are scaled to [0, 1] over the front; the knee is the point
    farthest below the chord joining the two extreme points. Ties and flat
    fronts fall back to the lowest makespan.
    """
    if not points:
        raise ValueError("empty front")
    pts = np.asarray(points, dtype=float)
    lex = min(range(len(pts)), key=lambda i: (pts[i, 0], pts[i, 1], i))
    if len(pts) == 1:
        return 0
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if np.any(hi <= lo):
        return lex
    z = (pts - lo) / (hi - lo)
    a = z[int(np.argmin(z[:, 0] + 1e-12 * z[:, 1]))]
    b = z[int(np.argmin(z[:, 1] + 1e-12 * z[:, 0]))]
    chord = b - a
    norm = float(np.hypot(*chord))
    if norm == 0:
        return lex
    # positive on the ideal-point side of the chord
    signed = (chord[0] * (z[:, 1] - a[1]) - chord[1] * (z[:, 0] - a[0])) / norm
    signed = -signed
    best = float(signed.max())
    if best <= 1e-12:
        return lex
    ties = [i for i in range(len(pts)) if signed[i] >= best - 1e-12]
    return min(ties, key=lambda i: (pts[i, 0], pts[i, 1], i))
