"""Tournament crossing-sorties cuts and their separation on integral points.

A cut for the open sortie <i, j*, .> and a later launch node l, with truck
path P = (i, ..., l), reads

    sum_{h<h'} x[v_h, v_h'] + gf[i, j*] + sum_{m not in P, m != j*} gf[l, m]
        - sum_{k in P, k != i} gb[j*, k]  <=  |P|

The tournament sum reaches |P| - 1 only when the truck drives P in order; the
drone then either came back from j* somewhere on P (the subtracted return
term) or is still away when l launches again, which is the crossing the row
forbids.  Without the return term the row would also cut chained sorties
that share a rendezvous/launch node.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from fstsp.instance import Instance
from fstsp.milp.model import Constraint, MilpModel, parse_var_name, var_name

INT_TOL = 1e-6


class SeparationError(ValueError):
    """Input is fractional or its route arcs do not form one depot-to-depot walk."""


@dataclass(frozen=True)
class TournamentCut:
    path: tuple[int, ...]  # v(1) = first_launch, v(q) = second_launch
    first_launch: int
    second_launch: int
    excluded_returns: int  # customer j* of the open sortie; its returns on P enter negatively

    @property
    def rhs(self) -> int:
        return len(self.path)


def _integral_support(assignment: Mapping[str, float]) -> tuple[dict, list, list]:
    succ: dict[int, int] = {}
    gf, gb = [], []
    for name, value in assignment.items():
        tag, idx = parse_var_name(name)
        if tag not in ("x", "gfwd", "gback"):
            continue
        if min(abs(value), abs(value - 1)) > INT_TOL:
            raise SeparationError(f"{name}={value} is fractional; cuts are separated on integral points only")
        if value < 0.5:
            continue
        if tag == "x":
            if idx[0] in succ:
                raise SeparationError(f"node {idx[0]} has two outgoing route arcs")
            succ[idx[0]] = idx[1]
        elif tag == "gfwd":
            gf.append(idx)
        else:
            gb.append(idx)
    return succ, gf, gb


def separate_csec(inst: Instance, assignment: Mapping[str, float]) -> list[TournamentCut]:
    """All tournament cuts violated by an integral assignment, in one route walk.

    The walk follows x from depot 0.  At each node it first closes sorties
    returning there, then for every launch at the node emits one cut per
    sortie still open and opens the new one.  Sorties whose return node lies
    behind their launch never open.
    """
    succ, gf, gb = _integral_support(assignment)
    end = inst.end_depot
    route = [0]
    while route[-1] != end:
        nxt = succ.get(route[-1])
        if nxt is None or nxt in route:
            raise SeparationError("route arcs do not form a single walk from 0 to the end depot")
        route.append(nxt)
    if len(route) - 1 != len(succ):
        raise SeparationError("route arcs outside the depot-to-depot walk")
    pos = {node: k for k, node in enumerate(route)}

    launches: dict[int, list[int]] = {}
    for i, j in gf:
        launches.setdefault(i, []).append(j)
    returns_to = {j: k for j, k in gb}

    cuts: list[TournamentCut] = []
    seen = set()
    open_sorties: dict[int, int] = {}  # customer -> launch position
    for here, node in enumerate(route):
        for j in [j for j in open_sorties if returns_to.get(j) == node]:
            del open_sorties[j]
        for j in sorted(launches.get(node, ())):
            for other, start in open_sorties.items():
                key = (start, here, other)
                if key not in seen:
                    seen.add(key)
                    cuts.append(TournamentCut(tuple(route[start : here + 1]), route[start], node, other))
            k = returns_to.get(j)
            if k in pos and pos[k] > here:
                open_sorties[j] = here
    return cuts


def cut_to_row(cut: TournamentCut, model: MilpModel) -> Constraint:
    """The cut as a model row tagged ``eq32``."""
    path = cut.path
    on_path = set(path)
    j_star = cut.excluded_returns
    terms: list[tuple[str, float]] = []
    for h, a in enumerate(path):
        for b in path[h + 1 :]:
            name = var_name("x", a, b)
            if not model.has(name):
                raise KeyError(f"cut references {name}, which the model does not have")
            terms.append((name, 1.0))
    first = var_name("gfwd", cut.first_launch, j_star)
    if not model.has(first):
        raise KeyError(f"cut references {first}, which the model does not have")
    terms.append((first, 1.0))

    def free(name: str) -> bool:
        return model.has(name) and not model.variable(name).fixed_zero

    for m in range(1, model.num_customers + 1):
        name = var_name("gfwd", cut.second_launch, m)
        if m not in on_path and m != j_star and free(name):
            terms.append((name, 1.0))
    for k in path[1:]:
        name = var_name("gback", j_star, k)
        if free(name):
            terms.append((name, -1.0))
    label = "eq32_" + "_".join(map(str, path)) + f"_{j_star}"
    return Constraint(label, tuple(terms), "<=", float(cut.rhs), "eq32")
