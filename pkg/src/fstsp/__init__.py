"""Truck-and-drone routing: models, exact oracles and a matheuristic."""

from fstsp.instance import Instance, InstanceError, Sortie, feasible_sorties, load_instance, random_instance
from fstsp.solution import Schedule, Solution, SolutionError, evaluate, find_crossings

__all__ = [
    "Instance",
    "InstanceError",
    "Schedule",
    "Solution",
    "SolutionError",
    "Sortie",
    "evaluate",
    "feasible_sorties",
    "find_crossings",
    "load_instance",
    "random_instance",
]
