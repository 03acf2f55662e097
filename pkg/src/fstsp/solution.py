"""Solutions and the reference schedule evaluator.

``evaluate`` is the single source of truth for objective values.  Launch and
rendezvous service times never enter the time recursion; they are added to the
objective as constants, which keeps the evaluator and the MILP builders in
exact agreement.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from fstsp.instance import TOL, Instance, Sortie


class SolutionError(ValueError):
    """Raised when a solution is structurally malformed."""


@dataclass(frozen=True)
class Solution:
    route: tuple[int, ...]
    sorties: tuple[Sortie, ...] = ()

    def __init__(self, route: Sequence[int], sorties: Sequence[Sequence[int]] = ()) -> None:
        object.__setattr__(self, "route", tuple(int(v) for v in route))
        object.__setattr__(self, "sorties", tuple(Sortie(*map(int, s)) for s in sorties))

    @property
    def truck_customers(self) -> tuple[int, ...]:
        return self.route[1:-1]

    @property
    def drone_customers(self) -> tuple[int, ...]:
        return tuple(s.customer for s in self.sorties)


class Violation(NamedTuple):
    kind: str  # coverage | backward | crossing | endurance | eligibility
    message: str


@dataclass
class Schedule:
    t: dict[int, float]
    w: dict[int, float]
    objective: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def route_positions(inst: Instance, route: Sequence[int]) -> dict[int, int]:
    """Validate the route skeleton and return node -> position."""
    end = inst.end_depot
    if len(route) < 2 or route[0] != 0 or route[-1] != end:
        raise SolutionError(f"route must start at 0 and end at {end}: {list(route)}")
    pos: dict[int, int] = {}
    for idx, node in enumerate(route):
        if not 0 <= node <= end:
            raise SolutionError(f"route node {node} outside 0..{end}")
        if node in pos:
            raise SolutionError(f"route visits node {node} twice")
        pos[node] = idx
    return pos


def _check_sorties(inst: Instance, sol: Solution, pos: dict[int, int]) -> None:
    for s in sol.sorties:
        if not 1 <= s.customer <= inst.num_customers:
            raise SolutionError(f"sortie {s}: customer {s.customer} is not a customer index")
        for node in (s.launch, s.rendezvous):
            if node not in pos:
                raise SolutionError(f"sortie {s}: node {node} is not on the route")


def find_crossings(solution: Solution) -> list[tuple[Sortie, Sortie]]:
    """Ordered pairs (A, B) where B launches while A is still away.

    B crosses A when B's launch lies strictly inside A's route interval, or when
    both launch from the same node (reported once, in sortie-list order).
    Backward sorties have an empty interval and never play the role of A.
    """
    pos = {node: idx for idx, node in enumerate(solution.route)}
    for s in solution.sorties:
        if s.launch not in pos or s.rendezvous not in pos:
            raise SolutionError(f"sortie {s}: endpoint not on the route")
    sorties = solution.sorties
    pairs = []
    for a_idx, a in enumerate(sorties):
        la, ra = pos[a.launch], pos[a.rendezvous]
        if ra <= la:
            continue
        for b_idx, b in enumerate(sorties):
            if b_idx == a_idx:
                continue
            lb = pos[b.launch]
            if la < lb < ra or (lb == la and b_idx > a_idx):
                pairs.append((a, b))
    return pairs


def evaluate(inst: Instance, solution: Solution) -> Schedule:
    """Minimal synchronised schedule, objective and violation report."""
    pos = route_positions(inst, solution.route)
    _check_sorties(inst, solution, pos)
    tau_t = inst.tau_truck
    violations: list[Violation] = []

    served = Counter(solution.route[1:-1])
    served.update(s.customer for s in solution.sorties)
    for j in inst.customers:
        if served[j] != 1:
            what = "not served" if served[j] == 0 else f"served {served[j]} times"
            violations.append(Violation("coverage", f"customer {j} {what}"))
    for node in served:
        if not 1 <= node <= inst.num_customers:
            violations.append(Violation("coverage", f"depot {node} appears as a customer"))

    arriving: dict[int, list[Sortie]] = {}
    for s in solution.sorties:
        if s.customer not in inst.drone_eligible:
            violations.append(Violation("eligibility", f"sortie {s}: customer {s.customer} not drone-eligible"))
        if pos[s.rendezvous] <= pos[s.launch]:
            violations.append(Violation("backward", f"sortie {s}: rendezvous not after launch"))
        else:
            arriving.setdefault(s.rendezvous, []).append(s)
    for a, b in find_crossings(solution):
        violations.append(Violation("crossing", f"sortie {b} launches before {a} returns"))

    route = solution.route
    t = {0: 0.0}
    w = {}
    for prev, node in zip(route, route[1:]):
        ready = t[prev] + float(tau_t[prev, node])
        time = ready
        for s in arriving.get(node, ()):
            time = max(time, t[s.launch] + inst.flight_time(*s))
        t[node] = time
        w[node] = time - ready

    for s in solution.sorties:
        if pos[s.rendezvous] > pos[s.launch]:
            elapsed = t[s.rendezvous] - t[s.launch] + inst.sigma_rendezvous
            if elapsed > inst.endurance + TOL:
                violations.append(
                    Violation("endurance", f"sortie {s}: {elapsed:.6g} exceeds endurance {inst.endurance:.6g}")
                )

    objective = sum(float(tau_t[i, j]) for i, j in zip(route, route[1:]))
    for s in solution.sorties:
        objective += inst.sigma_rendezvous if s.launch == 0 else inst.sigma_launch + inst.sigma_rendezvous
    objective += sum(w.values())
    return Schedule(t=t, w=w, objective=objective, violations=violations)


def service_constant(inst: Instance, solution: Solution) -> float:
    """Launch/rendezvous time added to the objective on top of the route times."""
    n0 = sum(1 for s in solution.sorties if s.launch == 0)
    n1 = len(solution.sorties) - n0
    return inst.sigma_rendezvous * n0 + (inst.sigma_launch + inst.sigma_rendezvous) * n1


# ---------------------------------------------------------------------------
# solution file


def format_solution(solution: Solution) -> str:
    lines = ["route: " + " ".join(map(str, solution.route)), "sorties:"]
    lines += [f"{s.launch} {s.customer} {s.rendezvous}" for s in solution.sorties]
    return "\n".join(lines) + "\n"


def parse_solution(text: str) -> Solution:
    route = None
    sorties = []
    in_sorties = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("route:"):
                route = [int(v) for v in line[len("route:"):].split()]
                in_sorties = False
            elif line.startswith("sorties:"):
                in_sorties = True
            elif in_sorties:
                parts = [int(v) for v in line.split()]
                if len(parts) != 3:
                    raise SolutionError(f"line {lineno}: sortie needs 3 indices, got {line!r}")
                sorties.append(parts)
            else:
                raise SolutionError(f"line {lineno}: unexpected content {line!r}")
        except ValueError as exc:
            if isinstance(exc, SolutionError):
                raise
            raise SolutionError(f"line {lineno}: non-integer index in {line!r}") from exc
    if route is None:
        raise SolutionError("missing 'route:' line")
    return Solution(route, sorties)


def load_solution(path: str | Path) -> Solution:
    return parse_solution(Path(path).read_text(encoding="utf-8"))


def save_solution(solution: Solution, path: str | Path) -> None:
    Path(path).write_text(format_solution(solution), encoding="utf-8")
