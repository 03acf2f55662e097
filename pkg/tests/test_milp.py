from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linprog

from fstsp.instance import feasible_sorties, random_instance
from fstsp.milp import (
    Constraint,
    LpFormatError,
    MilpModel,
    ModelConfig,
    Variable,
    add_order_constraints,
    assignment_from_solution,
    build_2if,
    build_2ifbc_base,
    build_3if,
    build_model,
    check_assignment,
    completion_time_bound,
    decode_assignment,
    drone_aboard,
    export_lp,
    parse_lp,
)
from fstsp.exact import optimal_partition_dp
from fstsp.solution import Solution, evaluate
from oracles import random_feasible_solution

DATA = Path(__file__).parent / "data"
ALL_BUILDERS = [build_3if, build_2if, build_2ifbc_base]


def test_three_customer_arc_count():
    model = build_3if(random_instance(3, 0))
    assert len(model.variables_tagged("x")) == 13


def test_3if_variables():
    inst = random_instance(5, 2, endurance=30)
    model = build_3if(inst)
    assert {tuple(v.index) for v in model.variables_tagged("y")} == {tuple(s) for s in feasible_sorties(inst)}
    assert len(model.variables_tagged("z")) == inst.num_customers + 2
    assert model.variable("t_0").ub == 0


@pytest.mark.parametrize("builder", ALL_BUILDERS)
def test_drone_free_instance_accepts_any_tour(builder):
    inst = random_instance(5, 3, eligible_fraction=0)
    model = builder(inst)
    assert not model.variables_tagged("y")
    sol = Solution([0, 4, 2, 5, 1, 3, 6])
    report = check_assignment(model, assignment_from_solution(model, inst, sol))
    assert report.ok
    assert report.objective == pytest.approx(evaluate(inst, sol).objective)


def test_2if_fixings():
    inst = random_instance(6, 5, endurance=8)
    model = build_2if(inst)
    E, end = inst.endurance, inst.end_depot
    for v in model.variables_tagged("gfwd"):
        i, j = v.index
        expect_fixed = j not in inst.drone_eligible or inst.tau_drone[i, j] > E
        assert v.fixed_zero == expect_fixed, v.name
    for i in inst.launch_nodes:
        if model.has(f"gf_{i}_{end}"):
            assert model.variable(f"gf_{i}_{end}").fixed_zero
    for j in inst.customers:
        assert not model.has(f"gb_{j}_0") or model.variable(f"gb_{j}_0").fixed_zero
    assert any(v.fixed_zero for v in model.variables_tagged("gfwd") if v.index[1] in inst.drone_eligible)


def closed_form_2if_rows(inst, model):
    c = inst.num_customers
    arcs = c * (c + 1) + 1  # N0 x N+ without the c shared self-pairs
    free = {v.name for v in model.variables if not v.fixed_zero}
    gf = [(i, j) for i in inst.launch_nodes for j in inst.drone_eligible if i != j and f"gf_{i}_{j}" in free]
    gb = [(j, k) for j in inst.drone_eligible for k in inst.rendezvous_nodes if j != k and f"gb_{j}_{k}" in free]
    triples = [(i, j, k) for i, j in gf for jj, k in gb if jj == j and k != i]
    return {
        "eq4": 2, "eq5": c, "eq6": arcs, "eq8": arcs, "eq10": c + 1, "eq19": c, "eq20": c,
        "eq21": len(gf), "eq22": len(gb), "eq23": len(triples), "eq24": len(inst.drone_eligible),
        "eq25": c + 1, "eq27": arcs, "eq28": len(inst.drone_eligible),
    }


@pytest.mark.parametrize("seed", range(4))
def test_2if_row_counts_match_index_sets(seed):
    inst = random_instance(4, seed, endurance=25)
    model = build_2if(inst)
    assert dict(model.tag_census()) == closed_form_2if_rows(inst, model)


def test_2ifbc_has_no_z_and_tag_census_differs_only_where_expected():
    inst = random_instance(6, 1, endurance=30)
    full, base = build_2if(inst), build_2ifbc_base(inst)
    assert not base.variables_tagged("z")
    a, b = full.tag_census(), base.tag_census()
    assert {t for t in a if t not in b} == {"eq10", "eq25", "eq27"}
    assert {t for t in b if t not in a} == {"eq29", "eq30", "eq33", "eq34"}
    shared = set(a) & set(b)
    assert all(a[t] == b[t] for t in shared)
    removed = a["eq10"] + a["eq25"] + a["eq27"]
    added = sum(b[t] for t in ("eq29", "eq30", "eq33", "eq34"))
    assert len(full.constraints) - len(base.constraints) == removed - added


@pytest.mark.parametrize("seed", range(12))
def test_feasible_solutions_pass_all_builders(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(int(rng.integers(4, 9)), seed, endurance=40)
    sol = random_feasible_solution(inst, rng, drone_rate=0.7)
    expected = evaluate(inst, sol).objective
    for builder in ALL_BUILDERS:
        model = builder(inst)
        assignment = assignment_from_solution(model, inst, sol)
        report = check_assignment(model, assignment)
        assert report.ok, (builder.__name__, report.violations[:3], report.bound_violations[:3])
        assert report.objective == pytest.approx(expected, abs=1e-6)
        decoded = decode_assignment(model, assignment)
        assert decoded.route == sol.route and sorted(decoded.sorties) == sorted(sol.sorties)


def test_z_positions_and_pure_tour():
    inst = random_instance(7, 2, endurance=60)
    sol = Solution([0, 4, 1, 5, 2, 3, 8], [(0, 6, 1), (1, 7, 3)])
    z = drone_aboard(inst, sol)
    assert [i for i in sol.route if z[i] == 0] == [4, 5, 2]
    tour = Solution([0, 4, 1, 5, 2, 3, 6, 7, 8])
    assert all(v == 1 for v in drone_aboard(inst, tour).values())


def test_all_zero_assignment_violates_covering_rows():
    inst = random_instance(5, 0)
    report = check_assignment(build_2if(inst), {})
    names = {v.name for v in report.violations}
    for j in inst.customers:
        assert f"eq19_{j}" in names and f"eq20_{j}" in names


def find_endurance_case():
    """A feasible solution with a sortie whose truck-side wait makes it the longest."""
    for seed in range(200):
        rng = np.random.default_rng(seed)
        inst = random_instance(int(rng.integers(4, 8)), seed, endurance=40)
        sol = random_feasible_solution(inst, rng, drone_rate=0.8)
        sched = evaluate(inst, sol)
        spans = {s: sched.t[s.rendezvous] - sched.t[s.launch] + inst.sigma_rendezvous for s in sol.sorties}
        for s, elapsed in spans.items():
            floor = max([inst.flight_time(*q) + inst.sigma_rendezvous for q in sol.sorties])
            floor = max([floor] + [e for q, e in spans.items() if q != s])
            if elapsed - floor > 0.5:
                return inst, sol, (elapsed + floor) / 2
    raise AssertionError("no case found")


def test_endurance_breach_flags_only_endurance_rows():
    inst, sol, lowered = find_endurance_case()
    tight = inst.with_endurance(lowered)
    assert evaluate(tight, sol).kinds() == {"endurance"}
    for builder, tag in ((build_2if, "eq23"), (build_3if, "eq9"), (build_2ifbc_base, "eq23")):
        model = builder(tight)
        report = check_assignment(model, assignment_from_solution(model, tight, sol, strict=False))
        assert report.violated_tags() == {tag}
        assert not report.bound_violations


def test_crossing_rejected_by_2if_but_not_by_base():
    inst = random_instance(5, 7, eligible_fraction=100, endurance=200)
    sol = Solution([0, 1, 2, 3, 6], [(0, 4, 2), (1, 5, 3)])
    assert evaluate(inst, sol).kinds() == {"crossing"}
    full = build_2if(inst)
    assert check_assignment(full, assignment_from_solution(full, inst, sol, strict=False)).violated_tags() == {"eq27"}
    three = build_3if(inst)
    assert check_assignment(three, assignment_from_solution(three, inst, sol, strict=False)).violated_tags() == {"eq13"}
    base = build_2ifbc_base(inst)
    assert check_assignment(base, assignment_from_solution(base, inst, sol, strict=False)).ok


@pytest.mark.parametrize("seed", range(5))
def test_endurance_inequality_implied_at_integer_points(seed):
    """With one launch/return pair set, rows 21-23 alone have no t solution when row 28 fails."""
    inst = random_instance(5, seed, endurance=14)
    model = build_2if(inst, ModelConfig(include_endurance_inequality=False))
    tvars = model.variables_tagged("t")
    col = {v.name: k for k, v in enumerate(tvars)}
    rows = [r for r in model.constraints if r.tag in ("eq21", "eq22", "eq23")]
    checked = 0
    for i in inst.launch_nodes:
        for j in inst.drone_eligible:
            for k in inst.rendezvous_nodes:
                gf, gb = f"gf_{i}_{j}", f"gb_{j}_{k}"
                if len({i, j, k}) < 3 or model.variable(gf).fixed_zero or model.variable(gb).fixed_zero:
                    continue
                lhs28 = inst.tau_drone[i, j] + inst.sigma_rendezvous + inst.tau_drone[j, k]
                fixed = {gf: 1.0, gb: 1.0}
                a_ub, b_ub = [], []
                for r in rows:
                    coef = np.zeros(len(tvars))
                    const = 0.0
                    for name, value in r.coeffs:
                        if name in col:
                            coef[col[name]] += value
                        else:
                            const += value * fixed.get(name, 0.0)
                    sign = 1.0 if r.sense == "<=" else -1.0
                    a_ub.append(sign * coef)
                    b_ub.append(sign * (r.rhs - const))
                res = linprog(np.zeros(len(tvars)), A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                              bounds=[(v.lb, v.ub) for v in tvars], method="highs")
                assert res.status in (0, 2)
                assert (res.status == 0) == (lhs28 <= inst.endurance + 1e-9), (i, j, k)
                checked += 1
    assert checked > 0


@pytest.mark.parametrize("builder", ALL_BUILDERS)
@pytest.mark.parametrize("policy", ["tight", "global"])
def test_raising_big_m_keeps_verdicts(builder, policy):
    rng = np.random.default_rng(11)
    inst = random_instance(6, 11, endurance=40)
    formulation = {build_3if: "3IF", build_2if: "2IF", build_2ifbc_base: "2IF-BC-base"}[builder]
    base = ModelConfig(formulation, big_m_policy=policy)
    raised = ModelConfig(base.formulation, big_m_policy=policy, big_m_value=3 * completion_time_bound(inst))
    for _ in range(4):
        sol = random_feasible_solution(inst, rng, 0.7)
        for config in (base, raised):
            model = build_model(inst, config)
            assert check_assignment(model, assignment_from_solution(model, inst, sol)).ok


def test_order_constraints():
    inst = random_instance(6, 4, endurance=40)
    model = build_2if(inst)
    assert add_order_constraints(model, []) == model
    assert add_order_constraints(model, [3]) == model
    ordered = add_order_constraints(model, [2, 5, 1, 4])
    new = ordered.constraints[len(model.constraints):]
    assert ordered.constraints[: len(model.constraints)] == model.constraints
    assert len(new) == 3 and all(len(r.coeffs) == 2 and r.tag == "order" for r in new)
    with pytest.raises(ValueError):
        add_order_constraints(model, [1, 9])


@pytest.mark.parametrize("seed", range(5))
def test_order_rows_hold_for_dp_and_flag_reversed_order(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(6, seed, endurance=40)
    tour = [int(v) for v in rng.permutation(list(inst.customers))]
    sol = optimal_partition_dp(inst, tour)
    model = add_order_constraints(build_2if(inst), tour)
    assignment = assignment_from_solution(model, inst, sol, sequence=tour)
    assert check_assignment(model, assignment).ok
    flipped = add_order_constraints(build_2if(inst), tour[::-1])
    report = check_assignment(flipped, assignment)
    assert report.violated_tags() == {"order"}


def tiny_model():
    x = Variable("x_0_1", "binary", 0.0, 1.0, "x", (0, 1))
    row = Constraint("eq4_start", (("x_0_1", 1.0),), "=", 1.0, "eq4")
    return MilpModel("tiny", "2IF", 1, (x,), (row,), (("x_0_1", 2.5),), 10.0)


def test_lp_golden_file():
    assert export_lp(tiny_model()) == (DATA / "tiny.lp").read_text(encoding="utf-8")


@pytest.mark.parametrize("builder", ALL_BUILDERS)
def test_lp_round_trip(builder):
    model = builder(random_instance(3, 9, endurance=30))
    text = export_lp(model)
    assert parse_lp(text) == model
    assert export_lp(parse_lp(text)) == text


def test_lp_row_names_carry_tags():
    text = export_lp(build_2if(random_instance(3, 9, endurance=30)))
    assert " eq23_" in text and " eq6_" in text and " eq19_" in text


def test_lp_reader_rejects_garbage():
    with pytest.raises(LpFormatError):
        parse_lp("Minimize\n obj: x\nEnd\n")


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("4IF")
    with pytest.raises(ValueError):
        ModelConfig(big_m_policy="huge")
