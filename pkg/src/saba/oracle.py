"""Exhaustive Pareto front for tiny instances, used as ground truth in tests."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance
from .metrics import nondominated
from .schedule import LOAD_VISIT, Item, Solution, Token, evaluate, repair_route, route_cost


class OracleRefusedError(ValueError):
    """The instance is too large to enumerate."""


@dataclass(frozen=True)
class OracleSpec:
    max_tasks: int = 6
    split_granularity: int = 1
    max_candidates: int = 10**8

    def __post_init__(self) -> None:
        if not 1 <= self.max_tasks <= 6:
            raise ValueError("max_tasks must lie in 1..6")
        if self.split_granularity < 1:
            raise ValueError("split_granularity must be at least 1")


@dataclass(frozen=True)
class FrontPoint:
    makespan_s: float
    energy_kJ: float
    solution: Solution

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.makespan_s, self.energy_kJ)


def chunk_sizes(q: int, g: int) -> list[int]:
    """Split ``q`` into ``g`` near-equal integer chunks, remainder in the last; zero chunks dropped."""
    base = math.floor(q / g + 0.5)
    cuts = [min(q, i * base) for i in range(g)] + [q]
    return [b - a for a, b in zip(cuts, cuts[1:]) if b > a]


def _set_partitions(xs: Sequence[int]) -> Iterable[list[list[int]]]:
    if not xs:
        yield []
        return
    head, rest = xs[0], xs[1:]
    for part in _set_partitions(rest):
        yield [[head]] + part
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1 :]


def visit_options(q: int, g: int) -> list[tuple[int, ...]]:
    """Distinct ways to serve a task: sorted fruit counts of its visits."""
    chunks = chunk_sizes(q, g)
    return sorted({tuple(sorted(sum(b) for b in part)) for part in _set_partitions(chunks)})


def _configs(inst: Instance, g: int) -> list[tuple[Item, ...]]:
    per_task = [[tuple((t.id, c) for c in opt) for opt in visit_options(t.yield_fruits, g)] for t in inst.tasks]
    return [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*per_task)]


def _assignments(visits: Sequence[Item], r: int) -> Iterable[tuple[tuple[Item, ...], ...]]:
    for labels in itertools.product(range(r), repeat=len(visits)):
        yield tuple(tuple(sorted(v for v, l in zip(visits, labels) if l == k)) for k in range(r))


def _routes_in(m: int) -> int:
    return math.factorial(m) * 2 ** max(m - 1, 0)


def enumeration_size(inst: Instance, spec: OracleSpec) -> int:
    """Number of single-robot routes the oracle would simulate."""
    seen: set[tuple[Item, ...]] = set()
    total = 0
    for visits in _configs(inst, spec.split_granularity):
        for assign in _assignments(visits, inst.robot_count):
            for ms in assign:
                if ms not in seen:
                    seen.add(ms)
                    total += _routes_in(len(ms))
                    if total > spec.max_candidates:
                        return total
    return total


def robot_front(inst: Instance, visits: Sequence[Item], shuffle: np.random.Generator | None = None) -> dict[tuple[float, float], list[Token]]:
    """Pareto set of (completion time, transport energy) over all orderings and load-visit placements."""
    if not visits:
        return {(0.0, 0.0): []}
    perms = sorted(set(itertools.permutations(visits)))
    gaps = len(visits) - 1
    masks = list(itertools.product((False, True), repeat=gaps))
    if shuffle is not None:
        shuffle.shuffle(perms)
        shuffle.shuffle(masks)
    best: dict[tuple[float, float], list[Token]] = {}
    for perm in perms:
        for mask in masks:
            tokens: list[Token] = [perm[0]]
            for brk, item in zip(mask, perm[1:]):
                if brk:
                    tokens.append(LOAD_VISIT)
                tokens.append(item)
            route = repair_route(inst, tokens)
            cost = route_cost(inst, route)
            if not cost.feasible:
                continue
            key = (cost.time, cost.energy)
            if key not in best or str(route) < str(best[key]):
                best[key] = route
    keep = set(nondominated(best))
    return {k: v for k, v in best.items() if k in keep}


def enumerate_pareto(
    inst: Instance, spec: OracleSpec, shuffle_seed: int | None = None
) -> list[FrontPoint]:
    """Exact front over every chunk assignment, visit order and optional load visit.

    Energy visits follow the marker repair rule. ``shuffle_seed`` permutes the
    enumeration order (the result must not change).
    """
    if inst.n > spec.max_tasks:
        raise OracleRefusedError(f"{inst.n} tasks exceed the oracle limit of {spec.max_tasks}")
    size = enumeration_size(inst, spec)
    if size > spec.max_candidates:
        raise OracleRefusedError(f"enumeration needs more than {spec.max_candidates} routes")
    rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    cache: dict[tuple[Item, ...], dict] = {}

    def front_of(ms: tuple[Item, ...]) -> dict:
        if ms not in cache:
            cache[ms] = robot_front(inst, ms, rng)
        return cache[ms]

    candidates: dict[tuple[float, float], tuple[list[Token], ...]] = {}
    configs = _configs(inst, spec.split_granularity)
    if rng is not None:
        rng.shuffle(configs)
    for visits in configs:
        for assign in _assignments(visits, inst.robot_count):
            fronts = [list(front_of(ms).items()) for ms in assign]
            for combo in itertools.product(*fronts):
                t = max(c[0][0] for c in combo)
                e = 0.0
                for c in combo:
                    e += c[0][1]
                routes = tuple(c[1] for c in combo)
                if (t, e) not in candidates or str(routes) < str(candidates[(t, e)]):
                    candidates[(t, e)] = routes
            # prune to the running front to bound memory
            if len(candidates) > 4096:
                keep = set(nondominated(candidates))
                candidates = {k: v for k, v in candidates.items() if k in keep}

    points = []
    for key in nondominated(candidates):
        sol = Solution.from_tokens(candidates[key])
        rep = evaluate(inst, sol)
        assert rep.feasible, rep.violations
        points.append(FrontPoint(rep.makespan_s, rep.transport_energy_kJ, sol))
    exact = set(nondominated(p.objectives for p in points))
    return sorted((p for p in points if p.objectives in exact), key=lambda p: p.objectives)


def write_golden(points: Sequence[FrontPoint] | Sequence[tuple[float, float]], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    objs = sorted(p.objectives if isinstance(p, FrontPoint) else tuple(p) for p in points)
    lines = ["makespan_s,energy_kJ"] + [f"{a!r},{b!r}" for a, b in objs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_golden(path: str | Path) -> list[tuple[float, float]]:
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()[1:]
    return [tuple(float(x) for x in r.split(",")) for r in rows]  # type: ignore[misc]
