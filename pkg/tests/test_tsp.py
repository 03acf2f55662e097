import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstsp.tsp import path_cost, perturb_matrix, perturbation_factors, tsp_local_search
from oracles import held_karp


def euclidean(n, seed):
    pts = np.random.default_rng(seed).uniform(0, 100, size=(n, 2))
    pts = np.vstack([pts, pts[:1]])  # end depot coincides with the start depot
    cost = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    return cost


def is_local_optimum(cost, order):
    base = path_cost(cost, order)
    m = len(order)
    for i, j in itertools.combinations(range(m), 2):
        cand = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
        if path_cost(cost, cand) < base - 1e-9:
            return False
    for length in (1, 2, 3):
        for i in range(m - length + 1):
            seg, rest = order[i : i + length], order[:i] + order[i + length :]
            for k in range(len(rest) + 1):
                for piece in (seg, seg[::-1]):
                    if path_cost(cost, rest[:k] + piece + rest[k:]) < base - 1e-9:
                        return False
    return True


def test_equal_costs():
    cost = np.ones((5, 5))
    np.fill_diagonal(cost, 0)
    order = tsp_local_search(cost, [1, 2, 3])
    assert sorted(order) == [1, 2, 3]
    assert {path_cost(cost, list(p)) for p in itertools.permutations([1, 2, 3])} == {path_cost(cost, order)}


def test_seeded_eight_customers_reach_held_karp():
    cost = euclidean(9, 7)
    nodes = list(range(1, 9))
    order = tsp_local_search(cost, nodes, rng=np.random.default_rng(0))
    assert path_cost(cost, order) == pytest.approx(held_karp(cost, nodes))


@pytest.mark.parametrize("seed", range(10))
def test_result_is_two_opt_and_or_opt_local(seed):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(1, 50, size=(9, 9))  # asymmetric
    nodes = list(range(1, 8))
    order = tsp_local_search(cost, nodes, rng=rng)
    assert sorted(order) == nodes
    assert is_local_optimum(cost, order)
    assert tsp_local_search(cost, nodes, initial_order=order) == order


def test_subset_and_determinism():
    cost = euclidean(10, 3)
    subset = [2, 5, 7, 8]
    a = tsp_local_search(cost, subset, rng=np.random.default_rng(5))
    b = tsp_local_search(cost, subset, rng=np.random.default_rng(5))
    assert a == b and sorted(a) == subset
    with pytest.raises(ValueError):
        tsp_local_search(cost, subset, initial_order=[2, 5, 7])


def test_perturbation():
    rng = np.random.default_rng(0)
    cost = euclidean(8, 1)
    np.testing.assert_array_equal(perturb_matrix(cost, 0.0, rng), cost)
    noisy = perturb_matrix(cost, 0.5, rng)
    assert np.all(noisy >= cost) and np.all(noisy <= 1.5 * cost)
    assert np.all(noisy[cost == 0] == 0)
    again = perturb_matrix(cost, 0.5, np.random.default_rng(42))
    np.testing.assert_array_equal(again, perturb_matrix(cost, 0.5, np.random.default_rng(42)))
    with pytest.raises(ValueError):
        perturbation_factors(3, -0.1, rng)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 7))
def test_never_worse_than_start(seed, n):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0, 10, size=(n + 2, n + 2))
    start = [int(v) for v in rng.permutation(np.arange(1, n + 1))]
    order = tsp_local_search(cost, start, initial_order=start)
    assert path_cost(cost, order) <= path_cost(cost, start) + 1e-9
