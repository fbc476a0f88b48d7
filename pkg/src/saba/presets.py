"""Named instance presets: the fifteen benchmark scenarios and the real orchard block."""

from __future__ import annotations

from .instance import GeneratorSpec, InvalidSpecError

# name -> (rows, cols, tasks, robots)
BENCHMARK = {
    "pro1": (30, 50, 140, 4),
    "pro2": (40, 70, 120, 5),
    "pro3": (40, 90, 180, 4),
    "pro4": (60, 100, 560, 4),
    "pro5": (50, 120, 600, 6),
    "pro6": (60, 130, 360, 6),
    "pro7": (60, 140, 420, 5),
    "pro8": (70, 150, 640, 7),
    "pro9": (70, 160, 1260, 5),
    "pro10": (80, 170, 1600, 5),
    "pro11": (90, 170, 1320, 7),
    "pro12": (80, 180, 1680, 6),
    "pro13": (90, 190, 1820, 7),
    "pro14": (100, 190, 1120, 5),
    "pro15": (100, 200, 1500, 5),
}

# 880 trees as 22 rows of 40, three quarters of them ripe, five robots
REALWORLD = (22, 40, 0.75, 5)


def preset_names() -> list[str]:
    return list(BENCHMARK) + ["realworld"]


def preset_spec(name: str, seed: int = 0) -> GeneratorSpec:
    key = name.lower()
    if key in BENCHMARK:
        rows, cols, n, r = BENCHMARK[key]
        return GeneratorSpec(rows=rows, cols=cols, task_count=n, robot_count=r, seed=seed, name=key)
    if key == "realworld":
        rows, cols, frac, r = REALWORLD
        return GeneratorSpec(rows=rows, cols=cols, robot_count=r, harvest_fraction=frac, seed=seed, name=key)
    raise InvalidSpecError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
