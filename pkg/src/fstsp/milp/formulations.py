"""Builders for the three-index, two-index and two-index branch-and-cut models.

Row tags name the equation each row comes from (``eq6``, ``eq23`` ...).  Every
big-M row uses its own constant derived from one completion-time bound ``U``
(see :func:`completion_time_bound`), so a deactivated row is slack for every
schedule with all times in ``[0, U]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from fstsp.instance import Instance, feasible_sorties
from fstsp.milp.model import MilpModel, ModelBuilder, var_name

FORMULATIONS = ("3IF", "2IF", "2IF-BC-base")


@dataclass(frozen=True)
class ModelConfig:
    formulation: str = "2IF"
    big_m_policy: str = "tight"  # "tight": per-row constants; "global": one constant everywhere
    big_m_value: float | None = None  # overrides the computed bound U
    include_endurance_inequality: bool = True

    def __post_init__(self) -> None:
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.big_m_policy not in ("tight", "global"):
            raise ValueError("big_m_policy must be 'tight' or 'global'")
        if self.big_m_value is not None and not math.isfinite(self.big_m_value):
            raise ValueError("big_m_value must be finite")


def completion_time_bound(inst: Instance) -> float:
    """Upper bound on every synchronisation time of a structurally valid schedule.

    Along the route each step adds at most the largest truck arc into the node
    or the flight of the sortie landing there, so the sum of per-node maximum
    in-arcs plus the longest admissible flight of every eligible customer
    bounds the completion time of any solution whose sorties lie in F.
    """
    tau = inst.tau_truck
    bound = 0.0
    for j in inst.rendezvous_nodes:
        bound += max(float(tau[i, j]) for i in inst.launch_nodes if i != j)
    longest: dict[int, float] = {}
    for s in feasible_sorties(inst):
        longest[s.customer] = max(longest.get(s.customer, 0.0), inst.flight_time(*s))
    return bound + sum(longest.values())


class _Bigm:
    def __init__(self, inst: Instance, config: ModelConfig) -> None:
        self.U = completion_time_bound(inst) if config.big_m_value is None else float(config.big_m_value)
        self.global_m = None
        if config.big_m_policy == "global":
            biggest = max(float(inst.tau_truck.max()), float(inst.tau_drone.max()))
            self.global_m = self.U + biggest + inst.sigma_rendezvous

    def __call__(self, value: float) -> float:
        return self.global_m if self.global_m is not None else max(value, 0.0)


def _start(inst: Instance, config: ModelConfig, formulation: str) -> tuple[ModelBuilder, _Bigm]:
    bigm = _Bigm(inst, config)
    name = f"{inst.name or 'fstsp'}_{formulation}"
    mb = ModelBuilder(name, formulation, inst.num_customers, bigm.U)
    for i, j in inst.arcs():
        mb.add_var("x", (i, j), "binary", 0, 1)
        mb.add_obj(var_name("x", i, j), inst.tau_truck[i, j])
    for i in inst.nodes:
        mb.add_var("t", (i,), "continuous", 0, 0 if i == 0 else bigm.U)
    for i in inst.rendezvous_nodes:
        w = mb.add_var("w", (i,), "continuous", 0, bigm.U)
        mb.add_obj(w, 1.0)
    return mb, bigm


def _truck_rows(mb: ModelBuilder, inst: Instance, bigm: _Bigm) -> None:
    """Rows shared by all formulations: start/end, flow, truck timing, waits."""
    x = lambda i, j: var_name("x", i, j)  # noqa: E731
    t = lambda i: var_name("t", i)  # noqa: E731
    end = inst.end_depot
    mb.add_row("eq4", "start", [(x(0, j), 1) for j in inst.rendezvous_nodes], "=", 1)
    mb.add_row("eq4", "end", [(x(i, end), 1) for i in inst.launch_nodes], "=", 1)
    for j in inst.customers:
        terms = [(x(i, j), 1) for i in inst.launch_nodes if i != j]
        terms += [(x(j, k), -1) for k in inst.rendezvous_nodes if k != j]
        mb.add_row("eq5", str(j), terms, "=", 0)
    for i, j in inst.arcs():
        tau = float(inst.tau_truck[i, j])
        m = bigm(bigm.U + tau)
        mb.add_row("eq6", f"{i}_{j}", [(t(j), 1), (t(i), -1), (x(i, j), -m)], ">=", tau - m)
    for i, j in inst.arcs():
        tau = float(inst.tau_truck[i, j])
        m = bigm(bigm.U - tau)
        terms = [(var_name("w", j), 1), (t(j), -1), (t(i), 1), (x(i, j), -m)]
        mb.add_row("eq8", f"{i}_{j}", terms, ">=", -tau - m)


def _drone_on_truck_rows(mb: ModelBuilder, inst: Instance) -> None:
    for i in inst.nodes:
        mb.add_var("z", (i,), "binary", 0, 1)
    for i in inst.rendezvous_nodes:
        terms = [(var_name("z", i), 1)] + [(var_name("x", j, i), -1) for j in inst.launch_nodes if j != i]
        mb.add_row("eq10", str(i), terms, "<=", 0)


def build_3if(inst: Instance, config: ModelConfig | None = None) -> MilpModel:
    """Three-index model: sorties as y[i,j,k] over the feasible sortie set F."""
    config = config or ModelConfig("3IF")
    mb, bigm = _start(inst, config, "3IF")
    sig_l, sig_r = inst.sigma_launch, inst.sigma_rendezvous
    F = feasible_sorties(inst)
    for s in F:
        y = mb.add_var("y", tuple(s), "binary", 0, 1)
        mb.add_obj(y, sig_r if s.launch == 0 else sig_l + sig_r)
    _drone_on_truck_rows(mb, inst)
    _truck_rows(mb, inst, bigm)
    x = lambda i, j: var_name("x", i, j)  # noqa: E731
    t = lambda i: var_name("t", i)  # noqa: E731
    y = lambda s: var_name("y", *s)  # noqa: E731

    by_customer: dict[int, list] = {}
    by_pair: dict[tuple[int, int], list] = {}
    by_launch: dict[int, list] = {}
    by_rdv: dict[int, list] = {}
    for s in F:
        by_customer.setdefault(s.customer, []).append(s)
        by_pair.setdefault((s.launch, s.rendezvous), []).append(s)
        by_launch.setdefault(s.launch, []).append(s)
        by_rdv.setdefault(s.rendezvous, []).append(s)

    for j in inst.customers:
        drone = [(y(s), 1) for s in by_customer.get(j, [])]
        mb.add_row("eq2", str(j), [(x(i, j), 1) for i in inst.launch_nodes if i != j] + drone, "=", 1)
        mb.add_row("eq3", str(j), [(x(j, k), 1) for k in inst.rendezvous_nodes if k != j] + drone, "=", 1)
    for (i, k), group in sorted(by_pair.items()):
        # aggregated over the served customer: at most one of the group is active
        m = bigm(bigm.U)
        terms = [(t(k), 1), (t(i), -1)] + [(y(s), -(inst.flight_time(*s) + m)) for s in group]
        mb.add_row("eq7", f"{i}_{k}", terms, ">=", -m)
    for (i, k), group in sorted(by_pair.items()):
        m = bigm(bigm.U + sig_r - inst.endurance)
        terms = [(t(k), 1), (t(i), -1)] + [(y(s), m) for s in group]
        mb.add_row("eq9", f"{i}_{k}", terms, "<=", inst.endurance - sig_r + m)
    for i in inst.launch_nodes:
        terms = [(y(s), 1) for s in by_launch.get(i, [])] + [(var_name("z", i), -1)]
        mb.add_row("eq11", str(i), terms, "<=", 0)
    for i, j in inst.arcs():
        terms = [(var_name("z", j), 1), (var_name("z", i), -1), (x(i, j), 1)]
        terms += [(y(s), -1) for s in by_rdv.get(j, [])]
        terms += [(y(s), 1) for s in by_launch.get(i, [])]
        mb.add_row("eq13", f"{i}_{j}", terms, "<=", 1)
    return mb.build()


def _two_index_core(inst: Instance, config: ModelConfig, formulation: str) -> tuple[ModelBuilder, _Bigm]:
    mb, bigm = _start(inst, config, formulation)
    E, sig_l, sig_r = inst.endurance, inst.sigma_launch, inst.sigma_rendezvous
    tau_d = inst.tau_drone
    elig = inst.drone_eligible
    for i, j in inst.arcs():
        fixed = j not in elig or tau_d[i, j] > E
        gf = mb.add_var("gfwd", (i, j), "binary", 0, 0 if fixed else 1)
        if not fixed and i != 0:
            mb.add_obj(gf, sig_l)
    for j, k in inst.arcs():
        fixed = j not in elig or tau_d[j, k] + sig_r > E
        gb = mb.add_var("gback", (j, k), "binary", 0, 0 if fixed else 1)
        if not fixed:
            mb.add_obj(gb, sig_r)

    _truck_rows(mb, inst, bigm)
    x = lambda i, j: var_name("x", i, j)  # noqa: E731
    t = lambda i: var_name("t", i)  # noqa: E731
    gf = lambda i, j: var_name("gfwd", i, j)  # noqa: E731
    gb = lambda j, k: var_name("gback", j, k)  # noqa: E731
    free = mb.free

    for j in inst.customers:
        terms = [(x(i, j), 1) for i in inst.launch_nodes if i != j]
        terms += [(gf(i, j), 1) for i in inst.launch_nodes if i != j and free(gf(i, j))]
        mb.add_row("eq19", str(j), terms, "=", 1)
    for j in inst.customers:
        terms = [(x(j, k), 1) for k in inst.rendezvous_nodes if k != j]
        terms += [(gb(j, k), 1) for k in inst.rendezvous_nodes if k != j and free(gb(j, k))]
        mb.add_row("eq20", str(j), terms, "=", 1)
    for i, j in inst.arcs():
        if free(gf(i, j)):
            tau = float(tau_d[i, j])
            m = bigm(bigm.U + tau)
            mb.add_row("eq21", f"{i}_{j}", [(t(j), 1), (t(i), -1), (gf(i, j), -m)], ">=", tau - m)
    for j, k in inst.arcs():
        if free(gb(j, k)):
            tau = float(tau_d[j, k])
            m = bigm(bigm.U + tau)
            mb.add_row("eq22", f"{j}_{k}", [(t(k), 1), (t(j), -1), (gb(j, k), -m)], ">=", tau - m)
    m23 = bigm(bigm.U + sig_r - E)
    for i in inst.launch_nodes:
        for j in sorted(elig):
            if j == i or not free(gf(i, j)):
                continue
            for k in inst.rendezvous_nodes:
                if k in (i, j) or not free(gb(j, k)):
                    continue
                terms = [(t(k), 1), (t(i), -1), (gf(i, j), m23), (gb(j, k), m23)]
                mb.add_row("eq23", f"{i}_{j}_{k}", terms, "<=", E - sig_r + 2 * m23)
    for j in sorted(elig):
        terms = [(gf(i, j), 1) for i in inst.launch_nodes if i != j and free(gf(i, j))]
        terms += [(gb(j, k), -1) for k in inst.rendezvous_nodes if k != j and free(gb(j, k))]
        mb.add_row("eq24", str(j), terms, "=", 0)
    if config.include_endurance_inequality:
        for j in sorted(elig):
            terms = [(gf(i, j), float(tau_d[i, j]) + sig_r) for i in inst.launch_nodes if i != j and free(gf(i, j))]
            terms += [(gb(j, k), float(tau_d[j, k])) for k in inst.rendezvous_nodes if k != j and free(gb(j, k))]
            mb.add_row("eq28", str(j), terms, "<=", E)
    return mb, bigm


def build_2if(inst: Instance, config: ModelConfig | None = None) -> MilpModel:
    """Two-index model with launch/return variables and drone-presence z."""
    config = config or ModelConfig("2IF")
    mb, _ = _two_index_core(inst, config, "2IF")
    _drone_on_truck_rows(mb, inst)
    elig = sorted(inst.drone_eligible)
    gf = lambda i, j: var_name("gfwd", i, j)  # noqa: E731
    gb = lambda j, k: var_name("gback", j, k)  # noqa: E731
    for i in inst.launch_nodes:
        terms = [(gf(i, j), 1) for j in elig if j != i and mb.free(gf(i, j))] + [(var_name("z", i), -1)]
        mb.add_row("eq25", str(i), terms, "<=", 0)
    for i, j in inst.arcs():
        terms = [(var_name("z", j), 1), (var_name("z", i), -1), (var_name("x", i, j), 1)]
        terms += [(gb(k, j), -1) for k in elig if k != j and mb.free(gb(k, j))]
        terms += [(gf(i, k), 1) for k in elig if k != i and mb.free(gf(i, k))]
        mb.add_row("eq27", f"{i}_{j}", terms, "<=", 1)
    return mb.build()


def build_2ifbc_base(inst: Instance, config: ModelConfig | None = None) -> MilpModel:
    """Two-index model without z; crossing sorties are left to separated cuts."""
    config = config or ModelConfig("2IF-BC-base")
    mb, _ = _two_index_core(inst, config, "2IF-BC-base")
    x = lambda i, j: var_name("x", i, j)  # noqa: E731
    gf = lambda i, j: var_name("gfwd", i, j)  # noqa: E731
    gb = lambda j, k: var_name("gback", j, k)  # noqa: E731
    free = mb.free
    for i in inst.launch_nodes:
        terms = [(gf(i, j), 1) for j in inst.rendezvous_nodes if j != i and free(gf(i, j))]
        if terms:
            terms += [(x(i, h), -1) for h in inst.rendezvous_nodes if h != i]
            mb.add_row("eq29", str(i), terms, "<=", 0)
    for j in inst.rendezvous_nodes:
        terms = [(gb(i, j), 1) for i in inst.launch_nodes if i != j and free(gb(i, j))]
        if terms:
            terms += [(x(h, j), -1) for h in inst.launch_nodes if h != j]
            mb.add_row("eq30", str(j), terms, "<=", 0)
    for i, j in inst.arcs():
        if free(gf(i, j)) and free(gb(i, j)):
            mb.add_row("eq33", f"{i}_{j}", [(gf(i, j), 1), (gb(i, j), 1)], "<=", 1)
    for i, j in inst.arcs():
        if free(gf(i, j)) and j != 0 and i != inst.end_depot and free(gb(j, i)):
            mb.add_row("eq34", f"{i}_{j}", [(gf(i, j), 1), (gb(j, i), 1)], "<=", 1)
    return mb.build()


BUILDERS = {"3IF": build_3if, "2IF": build_2if, "2IF-BC-base": build_2ifbc_base}


def build_model(inst: Instance, config: ModelConfig) -> MilpModel:
    return BUILDERS[config.formulation](inst, config)
