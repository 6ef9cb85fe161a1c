"""Finite filtered probability spaces stored as scenario trees.

Nodes are numbered level-major: the root is node 0, every level occupies a
contiguous block of ids, and inside a level the nodes are sorted by parent.
With this layout the scenarios (root-to-leaf paths) below any node form a
contiguous block too, which keeps most operations a matter of slicing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation

PROB_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Time grid t_k = k * h for k = 0..N; level N stands in for t = infinity."""

    h: float
    N: int

    def __post_init__(self):
        if not self.h > 0:
            raise ContractViolation(f"grid step must be positive, got h={self.h}")
        if int(self.N) != self.N or self.N < 1:
            raise ContractViolation(f"horizon must be a positive integer, got N={self.N}")

    def time(self, k: int) -> float:
        return k * self.h

    def level_of(self, t: float) -> int:
        """The integer part [t/h], capped at N."""
        return min(int(np.floor(t / self.h + 1e-12)), self.N)

    def next_anchor(self, k: int) -> int:
        """Level of ([t/h] + 1) h for t on level k, capped at N."""
        return min(k + 1, self.N)

    def steps(self, delta: float) -> int:
        """Number of grid steps in delta; delta must be a positive multiple of h."""
        m = delta / self.h
        if m < 1 - 1e-9 or abs(m - round(m)) > 1e-9:
            raise ContractViolation(f"delta={delta} is not a positive multiple of h={self.h}")
        return int(round(m))


class FilteredTree:
    """A rooted scenario tree with positive edge probabilities.

    ``parents[n]`` is the parent of node ``n`` (``-1`` for the root) and
    ``probs[n]`` the probability of the edge leading into ``n``. The atoms of
    F_{t_k} are the nodes at level k.
    """

    def __init__(self, parents: Sequence[int], probs: Sequence[float], grid: GridSpec):
        self.grid = grid
        self.N = grid.N
        self.parent = np.asarray(parents, dtype=np.int64)
        self.edge_prob = np.asarray(probs, dtype=float)
        problems = self._structure_violations()
        if problems:
            raise ContractViolation("; ".join(problems))
        n = len(self.parent)
        self.n_nodes = n

        level = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            level[i] = level[self.parent[i]] + 1
        self.level = level
        self.offsets = np.searchsorted(level, np.arange(self.N + 2))

        self.children: list[list[int]] = [[] for _ in range(n)]
        for i in range(1, n):
            self.children[self.parent[i]].append(i)
        self.is_leaf = np.array([not c for c in self.children])

        stoch = self.stochasticity_violations()
        leaves_off_horizon = [i for i in range(n) if self.is_leaf[i] and level[i] != self.N]
        if leaves_off_horizon:
            stoch.append(f"horizon: leaves {leaves_off_horizon[:5]} are not at level N={self.N}")
        if level.max() != self.N:
            stoch.append(f"horizon: deepest level is {level.max()}, expected N={self.N}")
        if stoch:
            raise ContractViolation("; ".join(stoch))

        node_prob = np.ones(n)
        for i in range(1, n):
            node_prob[i] = node_prob[self.parent[i]] * self.edge_prob[i]
        self.node_prob = node_prob

        # parent of each node at level m+1, as a local index inside level m
        self._parent_local = [None] + [
            self.parent[self.level_slice(m)] - self.offsets[m - 1] for m in range(1, self.N + 1)
        ]

        leaves = np.arange(self.offsets[self.N], self.offsets[self.N + 1])
        paths = np.empty((len(leaves), self.N + 1), dtype=np.int64)
        paths[:, self.N] = leaves
        for k in range(self.N - 1, -1, -1):
            paths[:, k] = self.parent[paths[:, k + 1]]
        self.paths = paths
        self.n_scenarios = len(leaves)
        self.scenario_prob = node_prob[leaves]

        lo = np.full(n, self.n_scenarios, dtype=np.int64)
        hi = np.zeros(n, dtype=np.int64)
        for k in range(self.N + 1):
            col = paths[:, k]
            np.minimum.at(lo, col, np.arange(self.n_scenarios))
            np.maximum.at(hi, col, np.arange(self.n_scenarios) + 1)
        self.scen_lo, self.scen_hi = lo, hi

    def _structure_violations(self) -> list[str]:
        p, q = self.parent, self.edge_prob
        out = []
        if len(p) == 0 or p[0] != -1:
            return ["structure: node 0 must be the root (parent -1)"]
        if len(q) != len(p):
            return [f"structure: {len(p)} parents but {len(q)} edge probabilities"]
        for i in range(1, len(p)):
            if not 0 <= p[i] < i:
                out.append(f"structure: node {i} has parent {p[i]}; parents must precede children")
            elif i > 1 and p[i] < p[i - 1]:
                out.append(f"structure: node {i} breaks level-major, parent-sorted numbering")
        bad = [i for i in range(1, len(q)) if not (q[i] > 0 and np.isfinite(q[i]))]
        if bad:
            out.append(f"probability: non-positive edge probability at nodes {bad[:5]}")
        return out

    def stochasticity_violations(self) -> list[str]:
        out = []
        for i, kids in enumerate(self.children):
            if kids:
                s = float(self.edge_prob[kids].sum())
                if abs(s - 1.0) > PROB_TOL:
                    out.append(f"stochasticity: edge probabilities below node {i} sum to {s!r}")
        return out

    @classmethod
    def from_branching(cls, counts: Sequence[Sequence[int]], grid: GridSpec, probs=None):
        """Build a tree from per-level child counts.

        ``counts[k][j]`` is the number of children of the j-th node on level k.
        Edge probabilities default to uniform over siblings.
        """
        parents, edge = [-1], [1.0]
        width = 1
        first = 0
        for k in range(grid.N):
            row = counts[k]
            if len(row) != width:
                raise ContractViolation(f"level {k} has {width} nodes but {len(row)} counts")
            for j, c in enumerate(row):
                parents.extend([first + j] * c)
                edge.extend([1.0 / c] * c)
            first += width
            width = int(sum(row))
        if probs is not None:
            edge = list(probs)
        return cls(parents, edge, grid)

    @classmethod
    def uniform(cls, branching: int, grid: GridSpec):
        counts = [[branching] * branching**k for k in range(grid.N)]
        return cls.from_branching(counts, grid)

    def level_slice(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def count(self, k: int) -> int:
        return int(self.offsets[k + 1] - self.offsets[k])

    def nodes_at(self, k: int) -> np.ndarray:
        return np.arange(self.offsets[k], self.offsets[k + 1])

    def scenario_nodes(self, k: int) -> np.ndarray:
        """Local index (inside level k) of each scenario's level-k node."""
        return self.paths[:, k] - self.offsets[k]

    def scenarios_below(self, node: int) -> slice:
        return slice(int(self.scen_lo[node]), int(self.scen_hi[node]))

    def step_back(self, values: np.ndarray, m: int) -> np.ndarray:
        """E[. | F_{m-1}] of a level-m random variable given as a local array."""
        w = self.edge_prob[self.level_slice(m)] * values
        return np.bincount(self._parent_local[m], weights=w, minlength=self.count(m - 1))

    def __repr__(self):
        return f"FilteredTree(N={self.N}, h={self.grid.h}, nodes={self.n_nodes}, scenarios={self.n_scenarios})"


@dataclass
class RandomVariable:
    """An F_{t_k}-measurable quantity: one value per node on level k."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def check(self, tree: FilteredTree):
        if self.values.shape != (tree.count(self.level),):
            raise ContractViolation(
                f"level-{self.level} variable needs {tree.count(self.level)} values, "
                f"got shape {self.values.shape}"
            )


@dataclass
class AdaptedProcess:
    """One value per node of the tree (all levels at once)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def at(self, tree: FilteredTree, k: int) -> RandomVariable:
        return RandomVariable(k, self.values[tree.level_slice(k)])

    def along(self, tree: FilteredTree, times) -> np.ndarray:
        """Per-scenario value at the scenario's node on level ``times[s]``."""
        times = np.broadcast_to(np.asarray(times, dtype=np.int64), (tree.n_scenarios,))
        return self.values[tree.paths[np.arange(tree.n_scenarios), times]]


def condition(tree: FilteredTree, rv: RandomVariable, k: int) -> RandomVariable:
    """E[rv | F_{t_k}] for a level-m variable, k <= m."""
    rv.check(tree)
    if not 0 <= k <= rv.level:
        raise ContractViolation(f"cannot condition a level-{rv.level} variable on level {k}")
    vals = rv.values
    for m in range(rv.level, k, -1):
        vals = tree.step_back(vals, m)
    return RandomVariable(k, vals)


def expectation(tree: FilteredTree, rv: RandomVariable) -> float:
    return float(condition(tree, rv, 0).values[0])


def condition_scenarios(tree: FilteredTree, values, k: int) -> np.ndarray:
    """E[X | F_{t_k}] as a local level-k array, X given per scenario."""
    values = np.asarray(values, dtype=float)
    w = np.bincount(tree.scenario_nodes(k), weights=tree.scenario_prob * values, minlength=tree.count(k))
    return w / tree.node_prob[tree.level_slice(k)]


def conditional_expectation_at_stopping_time(tree: FilteredTree, values, sigma) -> dict[int, float]:
    """E[X | F_sigma] on the stopping boundary of sigma, keyed by node id.

    ``values`` holds X per scenario; ``sigma`` is a StoppingTime or an array of
    per-scenario stopping levels.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(getattr(sigma, "times", sigma), dtype=np.int64)
    nodes = tree.paths[np.arange(tree.n_scenarios), times]
    mass = np.bincount(nodes, weights=tree.scenario_prob, minlength=tree.n_nodes)
    acc = np.bincount(nodes, weights=tree.scenario_prob * values, minlength=tree.n_nodes)
    hit = np.flatnonzero(mass)
    return {int(n): float(acc[n] / mass[n]) for n in hit}
