"""Random restart local search around the fixed-order drone insertion.

Each iteration solves the drone insertion exactly for the current customer
order, re-optimizes the order of the truck customers, and restarts from a
TSP tour on randomly inflated travel times when that re-optimization finds
nothing to change.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from fstsp.exact import optimal_partition_dp, partition_objective
from fstsp.instance import Instance
from fstsp.milp.formulations import build_2if
from fstsp.milp.lp import export_lp
from fstsp.milp.model import add_order_constraints
from fstsp.solution import Solution, evaluate
from fstsp.tsp import perturb_matrix, tsp_local_search

InnerSolver = Callable[[Instance, Sequence[int]], Solution]
IMPROVE_TOL = 1e-9


@dataclass(frozen=True)
class RrlsConfig:
    time_limit: float | None = 20.0  # seconds; None means iterations only
    rng_seed: int = 0
    inner_solver: str = "dp"  # "dp" | "milp-export"
    noise_max: float = 0.5
    inner_time_limit: float = 30.0  # handed to external solvers in milp-export mode
    max_iterations: int | None = None
    export_dir: str | None = None  # where milp-export mode writes the fixed-order models

    def __post_init__(self) -> None:
        if self.time_limit is None and self.max_iterations is None:
            raise ValueError("set time_limit, max_iterations, or both")
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be non-negative")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.noise_max < 0:
            raise ValueError("noise_max must be non-negative")
        if self.inner_solver not in ("dp", "milp-export"):
            raise ValueError("inner_solver must be 'dp' or 'milp-export'")


class IterationRecord(NamedTuple):
    wall_ms: float
    iteration: int
    incumbent_objective: float
    restart_flag: int


@dataclass
class RrlsResult:
    solution: Solution
    objective: float
    log: list[IterationRecord] = field(default_factory=list)

    @property
    def restarts(self) -> int:
        return sum(r.restart_flag for r in self.log)


def format_log(log: Sequence[IterationRecord], include_wall: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(IterationRecord._fields)
    for rec in log:
        wall = repr(rec.wall_ms) if include_wall else ""
        writer.writerow([wall, rec.iteration, repr(rec.incumbent_objective), rec.restart_flag])
    return buf.getvalue()


def cheapest_insertion(cost: np.ndarray, order: Sequence[int], extra: Sequence[int]) -> list[int]:
    """Insert each of ``extra`` (in the given order) at its cheapest truck position."""
    seq = list(order)
    end = cost.shape[0] - 1
    for j in extra:
        path = [0, *seq, end]
        deltas = [cost[a, j] + cost[j, b] - cost[a, b] for a, b in zip(path, path[1:])]
        seq.insert(int(np.argmin(deltas)), j)
    return seq


def place_free_customers(inst: Instance, order: Sequence[int], free: Sequence[int]) -> list[int]:
    """Giant tour keeping ``order`` and placing each free customer where the DP likes it best.

    Free customers start at their cheapest truck positions; then each one in
    turn is moved to the position with the lowest fixed-order optimum.
    """
    seq = cheapest_insertion(inst.tau_truck, order, free)
    for j in free:
        seq.remove(j)
        best_k, best_val = 0, float("inf")
        for k in range(len(seq) + 1):
            val = partition_objective(inst, seq[:k] + [j] + seq[k:])
            if val < best_val - IMPROVE_TOL:
                best_k, best_val = k, val
        seq.insert(best_k, j)
    return seq


def milp_export_inner(export_dir: str | Path, fallback: InnerSolver = optimal_partition_dp) -> InnerSolver:
    """Inner solver that writes each fixed-order 2IF model as an LP file.

    No MILP engine ships with the package, so the returned solution comes from
    ``fallback``; the written files are for solving with an external tool.
    """
    out = Path(export_dir)
    out.mkdir(parents=True, exist_ok=True)
    counter = iter(range(1 << 62))

    def solve(inst: Instance, sequence: Sequence[int]) -> Solution:
        model = add_order_constraints(build_2if(inst), sequence)
        (out / f"iter{next(counter):05d}.lp").write_text(export_lp(model), encoding="utf-8")
        return fallback(inst, sequence)

    return solve


def rrls(inst: Instance, config: RrlsConfig, inner: InnerSolver | None = None) -> RrlsResult:
    """Run the search until the time or iteration budget is spent."""
    if inner is None:
        if config.inner_solver == "dp":
            inner = optimal_partition_dp
        else:
            inner = milp_export_inner(config.export_dir or "rrls_models")
    rng = np.random.default_rng(config.rng_seed)
    tau = inst.tau_truck
    customers = list(inst.customers)
    clock = time.perf_counter()
    order = tsp_local_search(tau, customers, None, rng)

    best_sol: Solution | None = None
    best_obj = float("inf")
    log: list[IterationRecord] = []
    restart = 0
    iteration = 0
    while True:
        sol = inner(inst, order)
        sched = evaluate(inst, sol)
        if sched.feasible and sched.objective < best_obj - IMPROVE_TOL:
            best_sol, best_obj = sol, sched.objective
        iteration += 1
        elapsed = time.perf_counter() - clock
        log.append(IterationRecord(elapsed * 1000.0, iteration, best_obj, restart))
        if config.max_iterations is not None and iteration >= config.max_iterations:
            break
        if config.time_limit is not None and elapsed >= config.time_limit:
            break

        truck = list(sol.truck_customers)
        improved = tsp_local_search(tau, truck, truck, rng) if truck else truck
        if improved == truck:
            # descent from nearest neighbour on the noisy matrix; extra random
            # starts here would pull every restart back towards the same tour
            noisy = perturb_matrix(tau, config.noise_max, rng)
            order = tsp_local_search(noisy, customers)
            restart = 1
        else:
            order = place_free_customers(inst, improved, sol.drone_customers)
            restart = 0

    if best_sol is None:
        # the first inner solve always yields a feasible solution; this guards custom solvers
        best_sol = Solution([0, *order, inst.end_depot])
        best_obj = evaluate(inst, best_sol).objective
    return RrlsResult(best_sol, best_obj, log)
