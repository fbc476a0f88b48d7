"""Energy-aware multi-robot harvest scheduling with split deliveries and battery swaps."""

from .instance import GeneratorSpec, Instance, PhysicalParams, TaskNode, generate_instance, read_instance, write_instance
from .schedule import Solution, dominates, evaluate, repair_depot_markers
from .evolution import RunConfig, run, select_default_solution

__all__ = [
    "GeneratorSpec",
    "Instance",
    "PhysicalParams",
    "RunConfig",
    "Solution",
    "TaskNode",
    "dominates",
    "evaluate",
    "generate_instance",
    "read_instance",
    "repair_depot_markers",
    "run",
    "select_default_solution",
    "write_instance",
]
