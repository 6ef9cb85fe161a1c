"""Payoff fields U^1, U^2, their continuity modulus, and the game functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .filtration import FilteredTree, RandomVariable, conditional_expectation_at_stopping_time
from .stopping import StoppingStrategy, StoppingTime, compose


class PayoffField:
    """U^i(j, k) for players i = 1, 2 and levels j, k in 0..N.

    Entry (i, j, k) is a random variable on level max(j, k), which is exactly
    F_{s v t}-measurability. ``tables[i-1][j][k]`` holds the local array.
    """

    def __init__(self, tree: FilteredTree, tables):
        self.tree = tree
        N = tree.N
        self.tables = [[[np.asarray(tables[p][j][k], dtype=float) for k in range(N + 1)] for j in range(N + 1)] for p in range(2)]
        scen = np.empty((2, N + 1, N + 1, tree.n_scenarios))
        for p in range(2):
            for j in range(N + 1):
                for k in range(N + 1):
                    m = max(j, k)
                    vals = self.tables[p][j][k]
                    if vals.shape != (tree.count(m),):
                        raise ContractViolation(
                            f"U^{p + 1}({j},{k}) must have {tree.count(m)} values on level {m}, got {vals.shape}"
                        )
                    if not np.all(np.isfinite(vals)):
                        raise ContractViolation(f"U^{p + 1}({j},{k}) has non-finite values")
                    scen[p, j, k] = vals[tree.scenario_nodes(m)]
        self.scen = scen
        self.bound = float(np.abs(scen).max())

    @classmethod
    def from_function(cls, tree: FilteredTree, f) -> "PayoffField":
        """``f(i, j, k, node)`` gives U^i(j, k) on a node of level max(j, k)."""
        N = tree.N
        tables = [
            [[[f(i, j, k, int(n)) for n in tree.nodes_at(max(j, k))] for k in range(N + 1)] for j in range(N + 1)]
            for i in (1, 2)
        ]
        return cls(tree, tables)

    @classmethod
    def constant(cls, tree: FilteredTree, c1: float, c2: float | None = None) -> "PayoffField":
        c2 = c1 if c2 is None else c2
        return cls.from_function(tree, lambda i, j, k, n: c1 if i == 1 else c2)

    def at(self, i: int, j: int, k: int) -> RandomVariable:
        return RandomVariable(max(j, k), self.tables[i - 1][j][k])

    def player(self, i: int) -> np.ndarray:
        """U^i as an array indexed [j, k, scenario]."""
        return self.scen[i - 1]

    def transposed(self) -> "PayoffField":
        """Swap the players and the argument order: new U^1(j,k) = U^2(k,j)."""
        N = self.tree.N
        t = [[[self.tables[1 - p][k][j] for k in range(N + 1)] for j in range(N + 1)] for p in range(2)]
        return PayoffField(self.tree, t)

    def oscillation(self, i: int | None = None) -> float:
        players = [i] if i else [1, 2]
        return max(float(np.ptp(self.scen[p - 1])) for p in players)

    def is_zero_sum(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.scen[0] + self.scen[1]) <= tol))


@dataclass
class Modulus:
    """Continuity modulus sampled at grid distances m * h, m = 0..2N."""

    h: float
    table: np.ndarray

    def __call__(self, d: float) -> float:
        if d < 0:
            raise ContractViolation("distance must be non-negative")
        m = min(int(np.floor(d / self.h + 1e-9)), len(self.table) - 1)
        return float(self.table[m])


def payoff_at(U: PayoffField, i: int, j: int, k: int, scenario: int) -> float:
    return float(U.scen[i - 1, j, k, scenario])


def empirical_modulus(U: PayoffField) -> Modulus:
    """Smallest non-decreasing r with |U(j,k) - U(j',k')| <= r(|j-j'|h + |k-k'|h)."""
    N = U.tree.N
    exact = np.zeros(2 * N + 1)
    for dj in range(0, N + 1):
        for dk in range(-N, N + 1):
            if dj == 0 and dk < 0:
                continue
            m = dj + abs(dk)
            if m == 0:
                continue
            a = U.scen[:, dj:, max(dk, 0):N + 1 + min(dk, 0)]
            b = U.scen[:, :N + 1 - dj, max(-dk, 0):N + 1 - max(dk, 0)]
            if a.size:
                exact[m] = max(exact[m], float(np.abs(a - b).max()))
    return Modulus(U.tree.grid.h, np.maximum.accumulate(exact))


def game_outcome(U: PayoffField, i: int, first_arg, second_arg) -> np.ndarray:
    """Per-scenario U^i(first_arg(w), second_arg(w), w)."""
    s = np.arange(U.tree.n_scenarios)
    return U.scen[i - 1, first_arg, second_arg, s]


def evaluate_game(U: PayoffField, i: int, rho: StoppingStrategy, tau: StoppingStrategy) -> float:
    """u^i(rho, tau) = E[U^i(rho[tau], tau[rho])]."""
    vals = game_outcome(U, i, compose(rho, tau), compose(tau, rho))
    return float(U.tree.scenario_prob @ vals)


def evaluate_subgame(U: PayoffField, i: int, rho: StoppingStrategy, tau: StoppingStrategy,
                     sigma: StoppingTime) -> dict[int, float]:
    """E_sigma[U^i(rho[tau], tau[rho])] on the boundary nodes of sigma."""
    if np.any(rho.first.times < sigma.times) or np.any(tau.first.times < sigma.times):
        raise ContractViolation("sub-game strategies must not stop before sigma")
    vals = game_outcome(U, i, compose(rho, tau), compose(tau, rho))
    return conditional_expectation_at_stopping_time(U.tree, vals, sigma)
