import numpy as np
import pytest

from stopgame import FilteredTree, GridSpec, PayoffField, generate

TOL = 1e-9


def det2_tree():
    """Single scenario, N = 2, h = 1."""
    return FilteredTree([-1, 0, 1], [1.0, 1.0, 1.0], GridSpec(1.0, 2))


def det2_field(zero_sum=True):
    tree = det2_tree()
    return PayoffField.from_function(tree, lambda i, j, k, n: max(j, k) if i == 1 or not zero_sum else -max(j, k))


def coin_tree():
    """Root, children u (node 1) and d (node 2) with probability 1/2, one child each."""
    return FilteredTree([-1, 0, 0, 1, 2], [1.0, 0.5, 0.5, 1.0, 1.0], GridSpec(1.0, 2))


def coin_sign(tree, n):
    # u-branch nodes are 1 and 3, d-branch nodes are 2 and 4
    return 0 if n == 0 else (1 if tree.paths[tree.scen_lo[n], 1] == 1 else -1)


def coin_field(zero_sum=True):
    tree = coin_tree()

    def f(i, j, k, n):
        m = max(j, k)
        u1 = 0.0 if m == 0 else coin_sign(tree, n) * m
        if i == 1:
            return u1
        if zero_sum:
            return -u1
        return 0.0 if m == 0 else coin_sign(tree, n) * (k - j) + 1.0

    return PayoffField.from_function(tree, f)


def const_field(c=3.0, N=3, branching=2):
    tree = FilteredTree.uniform(branching, GridSpec(0.5, N))
    return PayoffField.constant(tree, c)


def tiny_instances(count, seed0=0, zero_sum=False, max_nodes=12):
    """Generated instances with at most ``max_nodes`` nodes."""
    out = []
    seed = seed0
    while len(out) < count:
        N = 2 + seed % 2
        inst = generate(seed, N, 0.5, 3, 1.0, 5.0, zero_sum=zero_sum, ragged=True)
        if inst.tree.n_nodes <= max_nodes:
            out.append(inst)
        seed += 1
    return out


# ---- independent oracles: plain loops over scenarios, no vectorized tree code ----

def oracle_condition(tree, level_values, m, k):
    """E[X | F_k] for X given per level-m node (local index), by scenario sums."""
    out = []
    for n in tree.nodes_at(k):
        num = den = 0.0
        for s in range(tree.n_scenarios):
            if tree.paths[s, k] == n:
                p = tree.scenario_prob[s]
                num += p * level_values[tree.paths[s, m] - tree.offsets[m]]
                den += p
        out.append(num / den)
    return np.array(out)


def oracle_game(U, i, rho, tau):
    """u^i by the three-case split, scenario by scenario."""
    total = 0.0
    tree = U.tree
    for s in range(tree.n_scenarios):
        r0, t0 = rho.first.times[s], tau.first.times[s]
        if r0 < t0:
            a, b = r0, tau.reaction.times[r0, s]
        elif r0 > t0:
            a, b = rho.reaction.times[t0, s], t0
        else:
            a = b = r0
        node = tree.paths[s, max(a, b)]
        total += tree.scenario_prob[s] * U.tables[i - 1][a][b][node - tree.offsets[max(a, b)]]
    return total


@pytest.fixture
def det2():
    return det2_field()


@pytest.fixture
def coin():
    return coin_field()


@pytest.fixture
def const():
    return const_field()


# ---- acceptance summary: one line per criterion at the end of the run ----

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
