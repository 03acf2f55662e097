import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstsp.instance import Instance, random_instance
from fstsp.solution import (
    Solution,
    SolutionError,
    evaluate,
    find_crossings,
    format_solution,
    load_solution,
    parse_solution,
    save_solution,
    service_constant,
)
from oracles import feasible_solutions, random_feasible_solution, simulate


def route_cost(inst, route):
    return sum(float(inst.tau_truck[a, b]) for a, b in zip(route, route[1:]))


def test_pure_tsp_route():
    inst = random_instance(5, 0)
    route = [0, 3, 1, 5, 2, 4, 6]
    sched = evaluate(inst, Solution(route))
    assert sched.feasible
    assert sched.objective == pytest.approx(route_cost(inst, route), abs=1e-12)
    assert all(w == 0 for w in sched.w.values())
    assert sched.t[0] == 0


def line_instance(endurance=20.0):
    # customers on a line at 1, 2, 3; drone twice as fast; depot at 0
    x = np.array([0, 1, 2, 3, 0], dtype=float)
    truck = np.abs(x[:, None] - x[None, :])
    return Instance(3, truck, truck / 2, {1, 2, 3}, 1.0, 1.0, endurance)


def test_hand_computed_schedule():
    inst = line_instance()
    # truck 0 -> 1 -> 3 -> 4 while the drone flies 1 -> 2 -> 3
    sched = evaluate(inst, Solution([0, 1, 3, 4], [(1, 2, 3)]))
    assert sched.feasible
    assert sched.t == {0: 0.0, 1: 1.0, 3: 3.0, 4: 6.0}
    assert sched.w[3] == 0.0
    assert sched.objective == pytest.approx(6.0 + 2.0)


def test_wait_goes_to_rendezvous_node():
    inst = line_instance()
    # drone leaves the depot for customer 3 and meets the truck at 1
    sched = evaluate(inst, Solution([0, 1, 2, 4], [(0, 3, 1)]))
    assert sched.t[1] == pytest.approx(2.5)
    assert sched.w[1] == pytest.approx(1.5)
    assert sched.objective == pytest.approx(1 + 1 + 2 + 1.5 + 1.0)


def test_endurance_violation():
    inst = line_instance(endurance=2.0)
    sched = evaluate(inst, Solution([0, 1, 3, 4], [(1, 2, 3)]))
    assert sched.kinds() == {"endurance"}


@pytest.mark.parametrize(
    "sol, kind",
    [
        (Solution([0, 1, 2, 4]), "coverage"),
        (Solution([0, 1, 3, 4], [(3, 2, 1)]), "backward"),
        (Solution([0, 1, 2, 3, 4], [(0, 2, 4)]), "coverage"),
    ],
)
def test_violation_kinds(sol, kind):
    assert kind in evaluate(line_instance(), sol).kinds()


def test_eligibility_violation():
    inst = random_instance(4, 1, eligible_fraction=0, endurance=100)
    sched = evaluate(inst, Solution([0, 1, 3, 4, 5], [(1, 2, 3)]))
    assert sched.kinds() == {"eligibility"}


@pytest.mark.parametrize(
    "route, sorties",
    [([0, 5, 1], []), ([1, 2, 5], []), ([0, 1, 1, 5], []), ([0, 9, 5], []), ([0, 1, 2, 3, 5], [(0, 4, 7)])],
)
def test_malformed_solutions_raise(route, sorties):
    with pytest.raises(SolutionError):
        evaluate(random_instance(4, 0), Solution(route, sorties))


def test_crossing_examples():
    crossing = Solution([0, 1, 2, 3, 6], [(0, 4, 2), (1, 5, 3)])
    assert find_crossings(crossing) == [((0, 4, 2), (1, 5, 3))]
    chained = Solution([0, 1, 2, 3, 6], [(0, 4, 1), (1, 5, 2)])
    assert find_crossings(chained) == []
    assert find_crossings(Solution([0, 1, 2, 3, 5], [(0, 4, 2)])) == []
    same_launch = Solution([0, 1, 2, 3, 6], [(1, 4, 2), (1, 5, 3)])
    assert len(find_crossings(same_launch)) == 1


@pytest.mark.parametrize("seed", range(3))
def test_evaluate_matches_event_simulation_on_all_solutions(seed):
    inst = random_instance(4, seed, endurance=30)
    sols = feasible_solutions(inst)
    assert any(s.sorties for s, _ in sols)
    for sol, objective in sols:
        assert objective == pytest.approx(simulate(inst, sol), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_objective_decomposition_and_completion_time(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(int(rng.integers(3, 9)), seed, endurance=40)
    sol = random_feasible_solution(inst, rng)
    sched = evaluate(inst, sol)
    constant = service_constant(inst, sol)
    assert sched.objective - route_cost(inst, sol.route) - sum(sched.w.values()) == pytest.approx(constant, abs=1e-9)
    assert sched.t[inst.end_depot] + constant == pytest.approx(sched.objective, abs=1e-9)
    assert evaluate(inst, sol) == sched


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), bump=st.floats(0.0, 10.0))
def test_objective_monotone_in_truck_times(seed, bump):
    rng = np.random.default_rng(seed)
    inst = random_instance(int(rng.integers(3, 8)), seed, endurance=40)
    sol = random_feasible_solution(inst, rng)
    k = int(rng.integers(0, len(sol.route) - 1))
    a, b = sol.route[k], sol.route[k + 1]
    truck = inst.tau_truck.copy()
    if (a, b) == (0, inst.end_depot):
        return
    truck[a, b] += bump
    slower = Instance(inst.num_customers, truck, inst.tau_drone, inst.drone_eligible, 1, 1, inst.endurance)
    assert evaluate(slower, sol).objective >= evaluate(inst, sol).objective - 1e-12


def test_dropping_sorties_gives_pure_route_cost():
    rng = np.random.default_rng(4)
    inst = random_instance(7, 4, endurance=40)
    sol = random_feasible_solution(inst, rng, drone_rate=0.9)
    route = [*sol.route[:-1], *sol.drone_customers, inst.end_depot]
    assert evaluate(inst, Solution(route)).objective == pytest.approx(route_cost(inst, route))


def test_solution_file_round_trip(tmp_path):
    sol = Solution([0, 3, 1, 5], [(0, 2, 1), (1, 4, 5)])
    text = format_solution(sol)
    assert text == "route: 0 3 1 5\nsorties:\n0 2 1\n1 4 5\n"
    assert parse_solution(text) == sol
    save_solution(sol, tmp_path / "s.txt")
    assert load_solution(tmp_path / "s.txt") == sol


@pytest.mark.parametrize("text", ["sorties:\n0 1 2\n", "route: 0 a 2\n", "route: 0 1 2\nsorties:\n0 1\n", "junk\n"])
def test_solution_file_errors(text):
    with pytest.raises(SolutionError):
        parse_solution(text)
