import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stopgame import (ContractViolation, FilteredTree, GridSpec, RandomVariable, StoppingTime, condition,
                      conditional_expectation_at_stopping_time, expectation, generate)
from stopgame.filtration import condition_scenarios

from conftest import coin_tree, oracle_condition


def random_tree(seed, N=3, branching=3):
    return generate(seed, N, 0.5, branching, 1.0, 5.0, ragged=True).tree


def test_grid_spec_rejects_bad_parameters():
    with pytest.raises(ContractViolation):
        GridSpec(0.0, 2)
    with pytest.raises(ContractViolation):
        GridSpec(0.5, 0)
    g = GridSpec(0.5, 4)
    assert g.level_of(1.2) == 2
    assert g.next_anchor(1) == 2 and g.next_anchor(4) == 4
    assert g.steps(1.0) == 2
    with pytest.raises(ContractViolation):
        g.steps(0.75)


def test_tree_layout_and_scenarios():
    tree = coin_tree()
    assert tree.n_scenarios == 2
    assert tree.paths.tolist() == [[0, 1, 3], [0, 2, 4]]
    assert np.allclose(tree.scenario_prob, [0.5, 0.5])
    assert tree.count(1) == 2


def test_tree_rejects_substochastic_edges():
    with pytest.raises(ContractViolation, match="stochasticity"):
        FilteredTree([-1, 0, 0, 1, 2], [1.0, 0.5, 0.4, 1.0, 1.0], GridSpec(1.0, 2))


def test_tree_rejects_short_leaf():
    with pytest.raises(ContractViolation, match="horizon"):
        FilteredTree([-1, 0, 0, 1], [1.0, 0.5, 0.5, 1.0], GridSpec(1.0, 2))


def test_tree_rejects_non_level_major_numbering():
    with pytest.raises(ContractViolation, match="structure"):
        FilteredTree([-1, 0, 0, 2, 1], [1.0, 0.5, 0.5, 1.0, 1.0], GridSpec(1.0, 2))


def test_condition_constant():
    tree = random_tree(3)
    rv = RandomVariable(3, np.full(tree.count(3), 2.5))
    for k in range(4):
        assert np.allclose(condition(tree, rv, k).values, 2.5, atol=1e-12)


def test_condition_coin():
    tree = coin_tree()
    assert expectation(tree, RandomVariable(1, [4.0, 0.0])) == pytest.approx(2.0)
    assert condition(tree, RandomVariable(1, [4.0, 0.0]), 0).values.tolist() == [2.0]


def test_condition_level_mismatch():
    tree = coin_tree()
    with pytest.raises(ContractViolation):
        condition(tree, RandomVariable(1, [1.0, 2.0]), 2)
    with pytest.raises(ContractViolation):
        condition(tree, RandomVariable(1, [1.0, 2.0, 3.0]), 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_tower_property_and_oracle(seed):
    tree = random_tree(seed)
    rng = np.random.default_rng(seed)
    m = 3
    vals = rng.normal(size=tree.count(m))
    rv = RandomVariable(m, vals)
    for k in range(m + 1):
        direct = condition(tree, rv, k).values
        assert np.allclose(direct, oracle_condition(tree, vals, m, k), atol=1e-9)
        for j in range(k, m + 1):
            via = condition(tree, condition(tree, rv, j), k).values
            assert np.allclose(via, direct, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_condition_linear_and_monotone(seed, a, b):
    tree = random_tree(seed, N=2)
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, tree.count(2)))
    cx = condition(tree, RandomVariable(2, x), 1).values
    cy = condition(tree, RandomVariable(2, y), 1).values
    cz = condition(tree, RandomVariable(2, a * x + b * y), 1).values
    assert np.allclose(cz, a * cx + b * cy, atol=1e-9)
    hi = condition(tree, RandomVariable(2, np.maximum(x, y)), 1).values
    assert np.all(hi >= np.maximum(cx, cy) - 1e-12)


def test_expectation_is_scenario_sum():
    tree = random_tree(11)
    rng = np.random.default_rng(0)
    vals = rng.normal(size=tree.count(3))
    oracle = sum(tree.scenario_prob[s] * vals[tree.paths[s, 3] - tree.offsets[3]] for s in range(tree.n_scenarios))
    assert expectation(tree, RandomVariable(3, vals)) == pytest.approx(oracle, abs=1e-12)


def test_conditional_expectation_at_stopping_time():
    tree = coin_tree()
    vals = np.array([6.0, -2.0])
    at_end = conditional_expectation_at_stopping_time(tree, vals, StoppingTime.constant(tree, 2))
    assert at_end == {3: 6.0, 4: -2.0}
    at_root = conditional_expectation_at_stopping_time(tree, vals, StoppingTime.constant(tree, 0))
    assert at_root == {0: pytest.approx(2.0)}
    at_one = conditional_expectation_at_stopping_time(tree, vals, StoppingTime.constant(tree, 1))
    assert at_one == {1: 6.0, 2: -2.0}


def test_conditional_expectation_at_random_stopping_time_matches_oracle():
    tree = random_tree(5)
    rng = np.random.default_rng(5)
    stop = rng.random(tree.n_nodes) < 0.4
    sigma = StoppingTime(tree, stop | tree.is_leaf)
    vals = rng.normal(size=tree.n_scenarios)
    got = conditional_expectation_at_stopping_time(tree, vals, sigma)
    for n, v in got.items():
        idx = [s for s in range(tree.n_scenarios) if tree.paths[s, sigma.times[s]] == n]
        p = tree.scenario_prob[idx]
        assert v == pytest.approx(float(p @ vals[idx] / p.sum()), abs=1e-12)


def test_condition_scenarios_agrees_with_condition():
    tree = random_tree(8)
    rng = np.random.default_rng(8)
    leaf_vals = rng.normal(size=tree.count(3))
    scen = leaf_vals[tree.scenario_nodes(3)]
    for k in range(4):
        assert np.allclose(condition_scenarios(tree, scen, k), condition(tree, RandomVariable(3, leaf_vals), k).values)
