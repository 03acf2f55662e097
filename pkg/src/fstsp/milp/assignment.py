"""Encode solutions as model assignments and decode them back."""

from __future__ import annotations

from typing import Mapping, Sequence

from fstsp.instance import Instance
from fstsp.milp.model import MilpModel, parse_var_name, var_name
from fstsp.solution import Solution, SolutionError, evaluate, route_positions


def drone_aboard(inst: Instance, solution: Solution) -> dict[int, int]:
    """z-values: 1 on route nodes where the drone can be launched, else 0.

    A route node gets 0 exactly when it lies strictly inside some forward
    sortie interval and launches nothing itself.  Launch nodes keep 1 so a
    crossing shows up on the propagation rows rather than the launch-capacity
    rows.
    """
    pos = route_positions(inst, solution.route)
    launches = {s.launch for s in solution.sorties}
    inside = set()
    for s in solution.sorties:
        a, b = pos[s.launch], pos[s.rendezvous]
        inside.update(solution.route[a + 1 : b])
    z = {i: 0 for i in inst.nodes}
    for node in solution.route:
        z[node] = 1 if node in launches or node not in inside else 0
    return z


def assignment_from_solution(
    model: MilpModel,
    inst: Instance,
    solution: Solution,
    strict: bool = True,
    sequence: Sequence[int] | None = None,
) -> dict[str, float]:
    """Variable values encoding ``solution`` in ``model``.

    Route-node times and waits come from :func:`evaluate`.  A drone customer's
    time is its earliest arrival from the launch node, lifted to the time of
    its predecessor in ``sequence`` when one is given so that order rows hold.
    With ``strict=False`` infeasible solutions are encoded too, which is how
    violation tests build their inputs.
    """
    sched = evaluate(inst, solution)
    if strict and sched.violations:
        raise SolutionError("; ".join(v.message for v in sched.violations))
    values: dict[str, float] = {}
    route = solution.route
    for i, j in zip(route, route[1:]):
        values[var_name("x", i, j)] = 1.0
    three_index = model.formulation == "3IF"
    for s in solution.sorties:
        if three_index:
            values[var_name("y", *s)] = 1.0
        else:
            values[var_name("gfwd", s.launch, s.customer)] = 1.0
            values[var_name("gback", s.customer, s.rendezvous)] = 1.0

    t = {i: 0.0 for i in inst.nodes}
    t.update(sched.t)
    launch_of = {s.customer: s.launch for s in solution.sorties}
    drone_order = list(sequence) if sequence is not None else sorted(launch_of)
    prev = None
    for j in drone_order:
        if j in launch_of:
            a = launch_of[j]
            t[j] = t[a] + float(inst.tau_drone[a, j])
            if sequence is not None and prev is not None:
                t[j] = max(t[j], t[prev])
        prev = j
    for i in inst.nodes:
        if t[i] and model.has(var_name("t", i)):
            values[var_name("t", i)] = t[i]
    for i, wait in sched.w.items():
        if wait:
            values[var_name("w", i)] = wait
    if model.has(var_name("z", 0)):
        for i, zi in drone_aboard(inst, solution).items():
            if zi:
                values[var_name("z", i)] = 1.0
    return values


def decode_assignment(model: MilpModel, assignment: Mapping[str, float]) -> Solution:
    """Read the route and sorties back from integral x and y/g values."""
    succ: dict[int, int] = {}
    y, gf, gb = [], {}, {}
    for name, value in assignment.items():
        if value < 0.5:
            continue
        tag, idx = parse_var_name(name)
        if tag == "x":
            if idx[0] in succ:
                raise SolutionError(f"node {idx[0]} has two outgoing route arcs")
            succ[idx[0]] = idx[1]
        elif tag == "y":
            y.append(tuple(idx))
        elif tag == "gfwd":
            gf[idx[1]] = idx[0]
        elif tag == "gback":
            gb[idx[0]] = idx[1]
    end = model.num_customers + 1
    route = [0]
    while route[-1] != end:
        nxt = succ.get(route[-1])
        if nxt is None or nxt in route:
            raise SolutionError("route arcs do not form a single walk from 0 to the end depot")
        route.append(nxt)
    if len(route) - 1 != len(succ):
        raise SolutionError("route arcs outside the depot-to-depot walk")
    sorties = sorted(y)
    if gf or gb:
        if set(gf) != set(gb):
            raise SolutionError("launch and return variables do not pair up")
        sorties = sorted((gf[j], j, gb[j]) for j in gf)
    return Solution(route, sorties)
