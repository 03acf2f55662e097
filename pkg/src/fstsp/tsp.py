"""Open-path TSP improvement (2-opt and Or-opt) and travel-time perturbation.

Paths run from node 0 to the last matrix index (the end depot) through a
subset of customers.  Move deltas are O(1) thanks to forward and backward
prefix sums, which keeps reversals exact on asymmetric matrices.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

IMPROVE_TOL = 1e-10
MAX_OR_SEGMENT = 3
DEFAULT_RESTARTS = 4


def path_cost(cost: np.ndarray, order: Sequence[int]) -> float:
    path = [0, *order, cost.shape[0] - 1]
    return float(sum(cost[a, b] for a, b in zip(path, path[1:])))


def _nearest_neighbour(cost: np.ndarray, nodes: Sequence[int]) -> list[int]:
    left = sorted(nodes)
    order, cur = [], 0
    while left:
        nxt = min(left, key=lambda j: (cost[cur, j], j))
        order.append(nxt)
        left.remove(nxt)
        cur = nxt
    return order


def _prefix(cost: np.ndarray, path: list[int]) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(path)
    fwd = np.concatenate(([0.0], np.cumsum(cost[idx[:-1], idx[1:]])))
    bwd = np.concatenate(([0.0], np.cumsum(cost[idx[1:], idx[:-1]])))
    return fwd, bwd


def _two_opt_move(cost, path, fwd, bwd) -> bool:
    m = len(path) - 2
    for i in range(1, m):
        a, pi = path[i - 1], path[i]
        for j in range(i + 1, m + 1):
            pj, b = path[j], path[j + 1]
            delta = (
                cost[a, pj] + (bwd[j] - bwd[i]) + cost[pi, b]
                - cost[a, pi] - (fwd[j] - fwd[i]) - cost[pj, b]
            )
            if delta < -IMPROVE_TOL:
                path[i : j + 1] = path[i : j + 1][::-1]
                return True
    return False


def _or_opt_move(cost, path, fwd, bwd) -> bool:
    m = len(path) - 2
    for length in range(1, min(MAX_OR_SEGMENT, m) + 1):
        for i in range(1, m - length + 2):
            e = i + length - 1
            prev, first, last, nxt = path[i - 1], path[i], path[e], path[e + 1]
            removed = cost[prev, nxt] - cost[prev, first] - cost[last, nxt]
            flip = (bwd[e] - bwd[i]) - (fwd[e] - fwd[i])
            for k in range(0, m + 1):
                if i - 1 <= k <= e:
                    continue
                u, v = path[k], path[k + 1]
                base = removed - cost[u, v]
                forward = base + cost[u, first] + cost[last, v]
                backward = base + cost[u, last] + cost[first, v] + flip
                if min(forward, backward) < -IMPROVE_TOL:
                    seg = path[i : e + 1]
                    if backward < forward - IMPROVE_TOL:
                        seg = seg[::-1]
                    rest = path[:i] + path[e + 1 :]
                    at = k + 1 if k < i else k - length + 1
                    path[:] = rest[:at] + seg + rest[at:]
                    return True
    return False


def _descend(cost: np.ndarray, order: list[int]) -> list[int]:
    path = [0, *order, cost.shape[0] - 1]
    while True:
        fwd, bwd = _prefix(cost, path)
        if _two_opt_move(cost, path, fwd, bwd):
            continue
        if _or_opt_move(cost, path, fwd, bwd):
            continue
        return path[1:-1]


def tsp_local_search(
    cost_matrix: np.ndarray,
    node_subset: Sequence[int],
    initial_order: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    restarts: int = DEFAULT_RESTARTS,
) -> list[int]:
    """A 2-opt and Or-opt local optimum over ``node_subset``.

    With ``initial_order`` the descent starts there and nothing else is tried,
    so a local optimum is returned unchanged.  Otherwise the descent starts
    from the nearest-neighbour order and, when ``rng`` is given, from
    ``restarts`` random orders as well; the cheapest result wins.
    """
    cost = np.asarray(cost_matrix, dtype=float)
    nodes = [int(v) for v in node_subset]
    if initial_order is not None:
        start = [int(v) for v in initial_order]
        if sorted(start) != sorted(nodes):
            raise ValueError("initial order must be a permutation of the node subset")
        return _descend(cost, start)
    if len(nodes) <= 1:
        return nodes
    best = _descend(cost, _nearest_neighbour(cost, nodes))
    best_cost = path_cost(cost, best)
    if rng is not None:
        for _ in range(restarts):
            cand = _descend(cost, [int(v) for v in rng.permutation(nodes)])
            cand_cost = path_cost(cost, cand)
            if cand_cost < best_cost - IMPROVE_TOL:
                best, best_cost = cand, cand_cost
    return best


def perturbation_factors(shape, noise_max: float, rng: np.random.Generator) -> np.ndarray:
    """Independent factors 1 + u with u uniform on [0, noise_max]."""
    if noise_max < 0:
        raise ValueError("noise_max must be non-negative")
    return 1.0 + rng.uniform(0.0, noise_max, size=shape)


def perturb_matrix(cost_matrix: np.ndarray, noise_max: float, rng: np.random.Generator) -> np.ndarray:
    """Cost matrix with every entry scaled by its own random factor."""
    cost = np.asarray(cost_matrix, dtype=float)
    return cost * perturbation_factors(cost.shape, noise_max, rng)
