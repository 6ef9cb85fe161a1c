"""Zero-sum Dynkin game on a band X <= Z <= Y.

The payoff of a pair of stopping times is

    V(rho_0, tau_0) = E[X_rho 1{rho < tau} + Y_tau 1{rho > tau} + Z_rho 1{rho = tau}].

In orientation 1 the rho-player maximizes V; in orientation 2 (the game of
player 2) the tau-player maximizes and the band is Y <= Z <= X. Either way the
maximizer's own early stop yields the lower band edge and the minimizer's
yields the upper one, so the one-step game is solved in pure strategies by
the median of (lower edge, continuation, upper edge).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .filtration import AdaptedProcess, FilteredTree
from .stopping import StoppingTime, first_entry

BAND_TOL = 1e-9


def _edges(X: AdaptedProcess, Y: AdaptedProcess, orientation: int):
    if orientation == 1:
        return X.values, Y.values
    if orientation == 2:
        return Y.values, X.values
    raise ContractViolation(f"orientation must be 1 or 2, got {orientation}")


@dataclass
class DynkinSolution:
    tree: FilteredTree
    value: AdaptedProcess
    orientation: int
    rho_region: np.ndarray
    tau_region: np.ndarray

    @property
    def saddle(self) -> tuple[StoppingTime, StoppingTime]:
        return self.saddle_from(0)

    @property
    def root_value(self) -> float:
        return float(self.value.values[0])

    def saddle_from(self, sigma) -> tuple[StoppingTime, StoppingTime]:
        """Saddle pair of the sub-game started at sigma (stopping time or level)."""
        start = np.broadcast_to(np.asarray(getattr(sigma, "times", sigma), dtype=np.int64),
                                (self.tree.n_scenarios,))
        floor = int(start.min())
        rho = StoppingTime.from_times(self.tree, first_entry(self.tree, self.rho_region, start), floor)
        tau = StoppingTime.from_times(self.tree, first_entry(self.tree, self.tau_region, start), floor)
        return rho, tau


def evaluate_V(tree: FilteredTree, X: AdaptedProcess, Y: AdaptedProcess, Z: AdaptedProcess,
               rho0, tau0) -> float:
    a = np.asarray(getattr(rho0, "times", rho0), dtype=np.int64)
    b = np.asarray(getattr(tau0, "times", tau0), dtype=np.int64)
    vals = np.where(a < b, X.along(tree, a), np.where(a > b, Y.along(tree, b), Z.along(tree, a)))
    return float(tree.scenario_prob @ vals)


def solve(tree: FilteredTree, X: AdaptedProcess, Y: AdaptedProcess, Z: AdaptedProcess,
          orientation: int = 1) -> DynkinSolution:
    lo, hi = _edges(X, Y, orientation)
    z = Z.values
    bad = np.flatnonzero((lo > z + BAND_TOL) | (z > hi + BAND_TOL))
    if len(bad):
        n = int(bad[0])
        raise ContractViolation(
            f"band condition fails at node {n}: lower={lo[n]!r}, Z={z[n]!r}, upper={hi[n]!r}"
        )
    tol = 1e-12 * max(1.0, float(np.abs(z).max()), float(np.abs(lo).max()), float(np.abs(hi).max()))

    v = np.empty(tree.n_nodes)
    sl = tree.level_slice(tree.N)
    v[sl] = z[sl]
    for k in range(tree.N - 1, -1, -1):
        sl = tree.level_slice(k)
        c = tree.step_back(v[tree.level_slice(k + 1)], k + 1)
        v[sl] = np.minimum(hi[sl], np.maximum(lo[sl], c))

    max_stops = v <= lo + tol
    min_stops = v >= hi - tol
    if orientation == 1:
        rho_region, tau_region = max_stops, min_stops
    else:
        rho_region, tau_region = min_stops, max_stops
    return DynkinSolution(tree, AdaptedProcess(v), orientation, rho_region | tree.is_leaf,
                          tau_region | tree.is_leaf)


def subgame_value_at(solution: DynkinSolution, sigma: StoppingTime) -> dict[int, float]:
    return {int(n): float(solution.value.values[n]) for n in sigma.boundary()}


def check_submartingale(tree: FilteredTree, v: AdaptedProcess, mu: StoppingTime) -> float:
    """min over nodes strictly before mu of E_n[v_next] - v_n (0.0 if there are none)."""
    drift = np.full(tree.n_nodes, np.inf)
    for k in range(tree.N):
        sl = tree.level_slice(k)
        drift[sl] = tree.step_back(v.values[tree.level_slice(k + 1)], k + 1) - v.values[sl]
    mask = mu.before()
    return float(drift[mask].min()) if mask.any() else 0.0


def best_response_V(tree: FilteredTree, X: AdaptedProcess, Y: AdaptedProcess, Z: AdaptedProcess,
                    opponent: StoppingTime, deviator: str, sense: str) -> float:
    """Optimal V for one player against a fixed stopping time of the other.

    ``deviator`` is 'rho' or 'tau'; ``sense`` is 'sup' or 'inf'.
    """
    if deviator == "rho":
        own, other = X.values, Y.values
    elif deviator == "tau":
        own, other = Y.values, X.values
    else:
        raise ContractViolation(f"deviator must be 'rho' or 'tau', got {deviator!r}")
    pick = np.maximum if sense == "sup" else np.minimum
    z = Z.values
    opp_stops = opponent.stop
    a = np.empty(tree.n_nodes)
    sl = tree.level_slice(tree.N)
    a[sl] = z[sl]
    for k in range(tree.N - 1, -1, -1):
        sl = tree.level_slice(k)
        c = tree.step_back(a[tree.level_slice(k + 1)], k + 1)
        a[sl] = np.where(opp_stops[sl], pick(z[sl], other[sl]), pick(own[sl], c))
    return float(a[0])
