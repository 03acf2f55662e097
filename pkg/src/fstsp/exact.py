"""Exact drone insertion on a fixed customer order, and a brute-force optimum.

The DP works on the extended sequence S = (0, s_1, ..., s_c, c+1).  A state is
a position reached by the truck; a move either drives to the next position or
flies one segment [a..b]: the drone serves one interior position p while the
truck drives the other interior positions in order.  A segment is admissible
when its elapsed time fits the endurance and the minimal schedule keeps the
customer times in sequence order:

    tau_D[S_a, S_p] <= truck time a -> p+1      (drone not later than the successor)
    truck time a -> p-1 <= elapsed - tau_D[S_p, S_b]   (not earlier than the predecessor)

so the returned solution also satisfies the order rows of the fixed-order
MILP with the times produced by ``evaluate``.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from fstsp.instance import TOL, Instance, Sortie
from fstsp.solution import Solution, SolutionError, evaluate, route_positions

TIE_TOL = 1e-9
DEFAULT_CAP = 8


class OracleCapError(ValueError):
    """Brute force refused: the instance has more customers than the cap."""


def _check_tour(inst: Instance, giant_tour: Sequence[int]) -> list[int]:
    tour = [int(v) for v in giant_tour]
    if sorted(tour) != list(inst.customers):
        raise SolutionError(f"giant tour must be a permutation of 1..{inst.num_customers}")
    return tour


class _Table:
    """Incremental DP over a growing extended sequence."""

    def __init__(self, inst: Instance) -> None:
        self.inst = inst
        self.seq = [0]
        self.pre = [0.0]
        self.best: list[tuple[float, int, tuple[Sortie, ...]]] = [(0.0, 0, ())]

    def _tt(self, a: int, b: int) -> float:
        return float(self.inst.tau_truck[self.seq[a], self.seq[b]])

    def push(self, node: int) -> None:
        self.seq.append(node)
        b = len(self.seq) - 1
        self.pre.append(self.pre[-1] + self._tt(b - 1, b))
        prev = self.best[b - 1]
        best = (prev[0] + self._tt(b - 1, b), prev[1], prev[2])
        for a, p, elapsed in self.segments(b):
            base = self.best[a]
            launch = self.seq[a]
            sigma = self.inst.sigma_rendezvous + (0.0 if launch == 0 else self.inst.sigma_launch)
            cand = (base[0] + elapsed + sigma, base[1] + 1, base[2] + (Sortie(launch, self.seq[p], node),))
            if _better(cand, best):
                best = cand
        self.best.append(best)

    def pop(self) -> None:
        self.seq.pop()
        self.pre.pop()
        self.best.pop()

    def skip_length(self, a: int, p: int, b: int) -> float:
        """Truck time from position a to b leaving out position p."""
        return self.pre[b] - self.pre[a] - self._tt(p - 1, p) - self._tt(p, p + 1) + self._tt(p - 1, p + 1)

    def segments(self, b: int) -> Iterator[tuple[int, int, float]]:
        inst = self.inst
        seq, pre = self.seq, self.pre
        tau_d = inst.tau_drone
        limit = inst.endurance - inst.sigma_rendezvous + TOL
        end = seq[b]
        for p in range(b - 1, 0, -1):
            j = seq[p]
            if j not in inst.drone_eligible or tau_d[j, end] > limit:
                continue
            for a in range(p - 1, -1, -1):
                truck = self.skip_length(a, p, b)
                if truck > limit:
                    break
                out = float(tau_d[seq[a], j])
                back = float(tau_d[j, end])
                elapsed = max(truck, out + back)
                if elapsed > limit:
                    continue
                if p + 1 < b and out > self.skip_length(a, p, p + 1) + TOL:
                    continue
                if pre[p - 1] - pre[a] > elapsed - back + TOL:
                    continue
                yield a, p, elapsed


def _better(cand, cur) -> bool:
    if cand[0] < cur[0] - TIE_TOL:
        return True
    if cand[0] > cur[0] + TIE_TOL:
        return False
    return (cand[1], cand[2]) < (cur[1], cur[2])


def _solution_from(seq: Sequence[int], sorties: Sequence[Sortie]) -> Solution:
    drone = {s.customer for s in sorties}
    return Solution([v for v in seq if v not in drone], sorties)


def partition_table(inst: Instance, giant_tour: Sequence[int]) -> _Table:
    table = _Table(inst)
    for node in _check_tour(inst, giant_tour):
        table.push(node)
    table.push(inst.end_depot)
    return table


def optimal_partition_dp(inst: Instance, giant_tour: Sequence[int]) -> Solution:
    """Cheapest solution whose truck order and drone positions follow ``giant_tour``."""
    table = partition_table(inst, giant_tour)
    return _solution_from(table.seq, table.best[-1][2])


def partition_objective(inst: Instance, giant_tour: Sequence[int]) -> float:
    """DP value of the fixed-order optimum (equals ``evaluate`` on its solution)."""
    return partition_table(inst, giant_tour).best[-1][0]


def giant_tour_from_solution(inst: Instance, solution: Solution) -> list[int]:
    """A customer order under which the DP can reproduce ``solution``.

    Each drone customer goes right after the last truck node of its segment
    that the truck reaches no later than the drone reaches the customer.
    """
    sched = evaluate(inst, solution)
    if not sched.feasible:
        raise SolutionError("solution is infeasible: " + "; ".join(v.message for v in sched.violations))
    route = list(solution.route)
    pos = route_positions(inst, route)
    after: dict[int, list[int]] = {}
    for s in solution.sorties:
        arrive = sched.t[s.launch] + float(inst.tau_drone[s.launch, s.customer])
        anchor = s.launch
        for node in route[pos[s.launch] : pos[s.rendezvous]]:
            if sched.t[node] <= arrive + TOL:
                anchor = node
        after.setdefault(anchor, []).append(s.customer)
    tour = []
    for node in route:
        if node not in (0, inst.end_depot):
            tour.append(node)
        tour.extend(after.get(node, []))
    return tour


def _prefix_bound(table: _Table) -> float:
    """Lower bound on the final DP value of any completion of the current prefix.

    The last state a <= k on an optimal path either is the prefix end k, or
    starts a segment that covers k; that segment costs at least the truck time
    over the positions a..k it contains, less one drone position if the drone
    customer sits at or before k.
    """
    k = len(table.seq) - 1
    inst = table.inst
    limit = inst.endurance - inst.sigma_rendezvous + TOL
    bound = table.best[k][0]
    for a in range(k - 1, -1, -1):
        options = [table.pre[k] - table.pre[a]]
        if table.seq[k] in inst.drone_eligible:
            options.append(table.pre[k - 1] - table.pre[a])
        for p in range(a + 1, k):
            if table.seq[p] in inst.drone_eligible:
                options.append(table.skip_length(a, p, k))
        options = [v for v in options if v <= limit]
        if options:
            bound = min(bound, table.best[a][0] + min(options) + inst.sigma_rendezvous)
    return bound


def _nearest_neighbour(inst: Instance) -> list[int]:
    left = set(inst.customers)
    tour, cur = [], 0
    while left:
        nxt = min(left, key=lambda j: (inst.tau_truck[cur, j], j))
        tour.append(nxt)
        left.remove(nxt)
        cur = nxt
    return tour


def brute_force_optimum(inst: Instance, max_customers: int = DEFAULT_CAP) -> tuple[Solution, float]:
    """Global optimum by depth-first search over all giant tours.

    Every feasible solution is reproduced by the DP on some giant tour (see
    :func:`giant_tour_from_solution`), so the minimum over all tours is the
    optimum.  Prefixes are extended one customer at a time, reusing the DP
    table, and pruned by :func:`_prefix_bound`.
    """
    c = inst.num_customers
    if c > max_customers:
        raise OracleCapError(f"{c} customers exceeds the brute-force cap of {max_customers}")
    start = _nearest_neighbour(inst)
    best_tour = start
    best_value = partition_objective(inst, start)
    table = _Table(inst)
    remaining = list(inst.customers)
    used = [False] * (c + 1)

    def search(depth: int) -> None:
        nonlocal best_tour, best_value
        if depth == c:
            table.push(inst.end_depot)
            value = table.best[-1][0]
            if value < best_value - TIE_TOL:
                best_value, best_tour = value, table.seq[1:-1]
            table.pop()
            return
        for j in remaining:
            if used[j]:
                continue
            used[j] = True
            table.push(j)
            if _prefix_bound(table) < best_value - TIE_TOL:
                search(depth + 1)
            table.pop()
            used[j] = False

    search(0)
    solution = optimal_partition_dp(inst, best_tour)
    return solution, evaluate(inst, solution).objective


__all__ = [
    "DEFAULT_CAP",
    "OracleCapError",
    "brute_force_optimum",
    "giant_tour_from_solution",
    "optimal_partition_dp",
    "partition_objective",
]
