"""Front quality: normalization, exact 2-D hypervolume, win counts and average ranks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

Point = tuple[float, float]


@dataclass(frozen=True)
class NormalizationBounds:
    min_makespan: float
    max_makespan: float
    min_energy: float
    max_energy: float
    degenerate: tuple[bool, bool] = (False, False)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "NormalizationBounds":
        pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            return cls(0.0, 1.0, 0.0, 1.0, (True, True))
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        degen = tuple(bool(h <= l) for l, h in zip(lo, hi))
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]), degen)  # type: ignore[arg-type]

    def normalize(self, p: Sequence[float]) -> Point:
        return (
            (p[0] - self.min_makespan) / (self.max_makespan - self.min_makespan),
            (p[1] - self.min_energy) / (self.max_energy - self.min_energy),
        )


def nondominated(points: Iterable[Sequence[float]]) -> list[Point]:
    """Non-dominated subset of 2-D minimization points, sorted by the first objective."""
    pts = sorted({(float(a), float(b)) for a, b in points})
    out: list[Point] = []
    best_y = float("inf")
    for x, y in pts:
        if y < best_y:
            out.append((x, y))
            best_y = y
    return out


def hypervolume(front: Iterable[Sequence[float]], bounds: NormalizationBounds | None = None) -> float:
    """Area dominated by ``front`` inside the unit box, reference point (1, 1).

    With ``bounds`` the raw points are normalized first; otherwise they are
    taken as already normalized. Coordinates are clipped to [0, 1], so points
    at or beyond the reference add nothing.
    """
    pts = [bounds.normalize(p) for p in front] if bounds is not None else [tuple(p) for p in front]
    clipped = [(min(max(x, 0.0), 1.0), min(max(y, 0.0), 1.0)) for x, y in pts]
    nd = nondominated(clipped)
    area = 0.0
    for i, (x, y) in enumerate(nd):
        x_next = nd[i + 1][0] if i + 1 < len(nd) else 1.0
        area += (x_next - x) * (1.0 - y)
    return area


@dataclass(frozen=True)
class WinCounts:
    wins: dict[str, int]
    ties: int
    hv: dict[str, list[float]]


def win_counts(runs: Mapping[str, Sequence[Sequence[Sequence[float]]]]) -> WinCounts:
    """Per run index, credit the variant whose HV strictly beats every other one.

    Bounds for a run index come from the union of all variants' fronts for
    that run.
    """
    names = list(runs)
    if not names:
        raise ValueError("no variants given")
    lengths = {len(runs[n]) for n in names}
    if len(lengths) != 1:
        raise ValueError(f"variants have different run counts: { {n: len(runs[n]) for n in names} }")
    n_runs = lengths.pop()
    wins = {n: 0 for n in names}
    hv = {n: [] for n in names}
    ties = 0
    for i in range(n_runs):
        bounds = NormalizationBounds.from_points(p for n in names for p in runs[n][i])
        vals = {n: hypervolume(runs[n][i], bounds) for n in names}
        for n in names:
            hv[n].append(vals[n])
        best = max(vals.values())
        leaders = [n for n in names if vals[n] == best]
        if len(leaders) == 1:
            wins[leaders[0]] += 1
        else:
            ties += 1
    return WinCounts(wins, ties, hv)


def average_ranks(table: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    """Mean rank per algorithm over instances; rank 1 = highest HV, ties share the mid rank."""
    instances = list(table)
    if not instances:
        raise ValueError("empty table")
    algos = list(table[instances[0]])
    for inst in instances:
        if set(table[inst]) != set(algos):
            raise ValueError(f"instance {inst!r} does not list every algorithm")
    mat = np.array([[table[i][a] for a in algos] for i in instances], dtype=float)
    if np.isnan(mat).any():
        raise ValueError("table has missing entries")
    ranks = np.vstack([rankdata(-row, method="average") for row in mat])
    return {a: float(m) for a, m in zip(algos, ranks.mean(axis=0))}
