"""Problem instances: orchard geometry, physical parameters, generation and file I/O."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

DEPOT_ALIASES = (-1, 0, 1)

# orchard layout, meters
ROW_SPACING_M = 3.0
TREE_SPACING_M = 2.0
DEPOT_OFFSET_M = 5.0


class InvalidSpecError(ValueError):
    """Raised when a generator spec cannot produce an instance."""


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be decoded."""


@dataclass(frozen=True)
class PhysicalParams:
    load_capacity_fruits: int = 300
    empty_weight_kg: float = 30.0
    fruit_weight_kg: float = 0.3
    pick_time_s: float = 7.0
    speed_mps: float = 1.0
    gravity: float = 9.81
    rolling_mu: float = 0.05
    efficiency: float = 0.8
    battery_kJ: float = 432.0
    swap_threshold_kJ: float = 86.4
    swap_time_s: float = 150.0
    pick_energy_kJ: float = 0.3

    def __post_init__(self) -> None:
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                out.append(f"{f.name} must be a positive finite number, got {v!r}")
        if isinstance(self.load_capacity_fruits, float) and not self.load_capacity_fruits.is_integer():
            out.append("load_capacity_fruits must be an integer")
        if self.efficiency > 1:
            out.append("efficiency must lie in (0, 1]")
        if not self.swap_threshold_kJ < self.battery_kJ:
            out.append("swap_threshold_kJ must be below battery_kJ")
        return out

    @property
    def energy_per_kg_m(self) -> float:
        """kJ needed to move one kilogram one meter."""
        return self.gravity * self.rolling_mu / self.efficiency * 1e-3


@dataclass(frozen=True)
class TaskNode:
    id: int
    yield_fruits: int
    row: int | None = None
    pos: float | None = None

    def __post_init__(self) -> None:
        if self.id < 2:
            raise ValueError(f"task id {self.id} collides with the depot aliases")
        if self.yield_fruits < 1:
            raise ValueError(f"task {self.id} has non-positive yield {self.yield_fruits}")


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable problem instance.

    ``distances`` is indexed by matrix position: row 0 is the depot, then tasks
    sorted by ascending id. Use :meth:`dist` with node ids instead of indexing it.
    """

    name: str
    tasks: tuple[TaskNode, ...]
    robot_count: int
    distances: np.ndarray
    params: PhysicalParams = field(default_factory=PhysicalParams)

    def __post_init__(self) -> None:
        tasks = tuple(sorted(self.tasks, key=lambda t: t.id))
        object.__setattr__(self, "tasks", tasks)
        d = np.array(self.distances, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        max_id = max((t.id for t in tasks), default=1)
        index = [-1] * (max_id + 1)
        index[0] = index[1] = 0
        for k, t in enumerate(tasks, start=1):
            if index[t.id] != -1 and t.id > 1:
                raise ValueError(f"duplicate task id {t.id}")
            index[t.id] = k
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_rows", d.tolist())
        object.__setattr__(self, "_yields", {t.id: t.yield_fruits for t in tasks})

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def task_ids(self) -> list[int]:
        return [t.id for t in self.tasks]

    @property
    def total_yield(self) -> int:
        return sum(t.yield_fruits for t in self.tasks)

    def has_task(self, node: int) -> bool:
        return 2 <= node < len(self._index) and self._index[node] > 0

    def yield_of(self, task: int) -> int:
        return self._yields[task]

    def matrix_index(self, node: int) -> int:
        if node == -1:
            return 0
        if node < 0 or node >= len(self._index) or self._index[node] < 0:
            raise KeyError(f"unknown node {node}")
        return self._index[node]

    def dist(self, a: int, b: int) -> float:
        return self._rows[self.matrix_index(a)][self.matrix_index(b)]

    def mean_depot_distance(self) -> float:
        if not self.tasks:
            return 0.0
        return float(np.mean(self.distances[0, 1:]))


@dataclass(frozen=True)
class GeneratorSpec:
    rows: int
    cols: int
    task_count: int | None = None
    robot_count: int = 4
    yield_range: tuple[int, int] = (30, 50)
    harvest_fraction: float = 1.0
    seed: int = 0
    name: str | None = None
    params: PhysicalParams = field(default_factory=PhysicalParams)

    @property
    def n(self) -> int:
        if self.task_count is not None:
            return self.task_count
        return round(self.rows * self.cols * self.harvest_fraction)


def aisle_distance(a: tuple[int, float] | None, b: tuple[int, float] | None, row_length: float) -> float:
    """Shortest drive between two orchard positions.

    Positions are ``(row index, meters along the row)`` with ``None`` for the
    depot. Rows can only be changed through the front aisle (position 0) or the
    back aisle (position ``row_length``); the depot sits on the front aisle
    5 m before row 0.
    """
    if a == b:
        return 0.0
    if a is None or b is None:
        row, pos = a if b is None else b
        return DEPOT_OFFSET_M + ROW_SPACING_M * row + pos
    (ra, pa), (rb, pb) = a, b
    if ra == rb:
        return abs(pa - pb)
    front = pa + pb
    back = (row_length - pa) + (row_length - pb)
    return min(front, back) + ROW_SPACING_M * abs(ra - rb)


def generate_instance(spec: GeneratorSpec) -> Instance:
    n = spec.n
    cells = spec.rows * spec.cols
    lo, hi = spec.yield_range
    if spec.rows < 1 or spec.cols < 1:
        raise InvalidSpecError("rows and cols must be positive")
    if n < 0 or n > cells:
        raise InvalidSpecError(f"cannot place {n} tasks on a {spec.rows}x{spec.cols} grid")
    if lo < 1 or hi < lo:
        raise InvalidSpecError(f"bad yield range {spec.yield_range}")
    if not 0 < spec.harvest_fraction <= 1:
        raise InvalidSpecError("harvest_fraction must lie in (0, 1]")
    if spec.robot_count < 1:
        raise InvalidSpecError("robot_count must be at least 1")

    rng = np.random.default_rng(spec.seed)
    chosen = np.sort(rng.choice(cells, size=n, replace=False))
    yields = rng.integers(lo, hi + 1, size=n)
    row_length = (spec.cols - 1) * TREE_SPACING_M

    tasks = []
    positions: list[tuple[int, float] | None] = [None]
    for k, (cell, q) in enumerate(zip(chosen.tolist(), yields.tolist())):
        row, col = divmod(cell, spec.cols)
        pos = col * TREE_SPACING_M
        tasks.append(TaskNode(id=k + 2, yield_fruits=int(q), row=row, pos=pos))
        positions.append((row, pos))

    size = n + 1
    d = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            d[i, j] = d[j, i] = aisle_distance(positions[i], positions[j], row_length)

    name = spec.name or f"grid{spec.rows}x{spec.cols}_n{n}_r{spec.robot_count}_s{spec.seed}"
    return Instance(name=name, tasks=tuple(tasks), robot_count=spec.robot_count, distances=d, params=spec.params)


def leg_energy(params: PhysicalParams, distance: float, load: int) -> float:
    return distance * (params.empty_weight_kg + load * params.fruit_weight_kg) * params.energy_per_kg_m


def validate_instance(inst: Instance) -> list[str]:
    """Return every invariant the instance breaks; an empty list means valid."""
    out = list(inst.params.problems())
    if inst.robot_count < 1:
        out.append("robot_count must be at least 1")
    d = inst.distances
    size = inst.n + 1
    if d.shape != (size, size):
        out.append(f"distance matrix has shape {d.shape}, expected {(size, size)}")
        return out
    if not np.all(np.isfinite(d)):
        out.append("distance matrix has non-finite entries")
    if np.any(d < 0):
        out.append("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        out.append("distance matrix diagonal is not zero")
    if not np.array_equal(d, d.T):
        bad = np.argwhere(d != d.T)
        i, j = bad[0]
        out.append(f"distance matrix is not symmetric (entry {i},{j})")
    p = inst.params
    for t in inst.tasks:
        k = inst.matrix_index(t.id)
        need = leg_energy(p, d[0, k], 0) + p.pick_energy_kJ + leg_energy(p, d[k, 0], 1)
        if need > p.battery_kJ:
            out.append(f"task {t.id} unreachable: round trip needs {need:.3f} kJ > battery {p.battery_kJ} kJ")
    return out


# ---------------------------------------------------------------- file I/O


def instance_to_dict(inst: Instance) -> dict:
    return {
        "name": inst.name,
        "params": asdict(inst.params),
        "robot_count": inst.robot_count,
        "tasks": [{"id": t.id, "yield": t.yield_fruits, "row": t.row, "pos": t.pos} for t in inst.tasks],
        "distances": inst.distances.tolist(),
    }


def instance_from_dict(data: dict) -> Instance:
    try:
        params = PhysicalParams(**data["params"])
        tasks = tuple(
            TaskNode(id=int(t["id"]), yield_fruits=int(t["yield"]), row=t.get("row"), pos=t.get("pos"))
            for t in data["tasks"]
        )
        return Instance(
            name=str(data["name"]),
            tasks=tasks,
            robot_count=int(data["robot_count"]),
            distances=np.asarray(data["distances"], dtype=float).reshape(len(tasks) + 1, len(tasks) + 1),
            params=params,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc}") from exc


def dumps_instance(inst: Instance) -> str:
    # json writes floats with repr(), which round-trips binary64 exactly
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def write_instance(inst: Instance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_instance(inst), encoding="utf-8")
    return path


def read_instance(path: str | Path) -> Instance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    return instance_from_dict(data)
