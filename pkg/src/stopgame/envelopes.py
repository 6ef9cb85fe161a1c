"""Anchored optimal-stopping values X^i, Y^i, Z^i and their grid optimizers.

For an anchor level t the value X_t freezes the first payoff argument at t
and optimizes the stopping time of the second argument; Y_t freezes the
second argument. Both are solved by backward induction on the frozen slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .filtration import AdaptedProcess, RandomVariable, condition_scenarios
from .payoff import PayoffField, empirical_modulus
from .stopping import StoppingTime, StrategyFamily

TIE_TOL = 1e-12

# sense of the X and Y problems for each player
SENSES = {1: ("inf", "sup"), 2: ("sup", "inf")}


def _frozen_slice(U: PayoffField, i: int, anchor: int, side: str, m: int) -> np.ndarray:
    if side == "first":
        return U.tables[i - 1][anchor][m]
    if side == "second":
        return U.tables[i - 1][m][anchor]
    raise ContractViolation(f"side must be 'first' or 'second', got {side!r}")


def anchored_value(U: PayoffField, i: int, anchor: int, side: str, sense: str,
                   floor: int | None = None) -> tuple[RandomVariable, StoppingTime]:
    """Optimal value of E_t[U^i(anchor, sigma)] (side='first') or
    E_t[U^i(sigma, anchor)] (side='second') over stopping times sigma >= floor.

    Returns the value on level ``floor`` (default: the anchor) and the
    optimal stopping time, which stops at the earliest optimal level.
    """
    tree = U.tree
    floor = anchor if floor is None else floor
    if not 0 <= anchor <= floor <= tree.N:
        raise ContractViolation(f"need 0 <= anchor <= floor <= N, got anchor={anchor}, floor={floor}")
    if sense not in ("inf", "sup"):
        raise ContractViolation(f"sense must be 'inf' or 'sup', got {sense!r}")

    stop = np.zeros(tree.n_nodes, dtype=bool)
    stop[tree.level_slice(tree.N)] = True
    value = _frozen_slice(U, i, anchor, side, tree.N)
    for m in range(tree.N - 1, floor - 1, -1):
        cont = tree.step_back(value, m + 1)
        now = _frozen_slice(U, i, anchor, side, m)
        here = now >= cont - TIE_TOL if sense == "sup" else now <= cont + TIE_TOL
        stop[tree.level_slice(m)] = here
        value = np.where(here, now, cont)
    return RandomVariable(floor, value), StoppingTime(tree, stop, floor)


@dataclass
class EnvelopeSet:
    """X^i, Y^i, Z^i for both players plus the optimizer tables.

    ``bar_rho[i][n]`` attains Y^i_n and ``bar_tau[i][n]`` attains X^i_n.
    """

    X: dict[int, AdaptedProcess]
    Y: dict[int, AdaptedProcess]
    Z: dict[int, AdaptedProcess]
    bar_rho: dict[int, list[StoppingTime]]
    bar_tau: dict[int, list[StoppingTime]]
    optimizer_slack: float = 0.0
    senses: dict[int, tuple[str, str]] = field(default_factory=lambda: dict(SENSES))


def build_envelopes(U: PayoffField) -> EnvelopeSet:
    tree = U.tree
    X, Y, Z, bar_rho, bar_tau = {}, {}, {}, {}, {}
    for i in (1, 2):
        x_sense, y_sense = SENSES[i]
        xv, yv, zv = (np.empty(tree.n_nodes) for _ in range(3))
        bar_rho[i], bar_tau[i] = [], []
        for t in range(tree.N + 1):
            sl = tree.level_slice(t)
            x, x_opt = anchored_value(U, i, t, "first", x_sense)
            y, y_opt = anchored_value(U, i, t, "second", y_sense)
            xv[sl], yv[sl] = x.values, y.values
            zv[sl] = U.tables[i - 1][t][t]
            bar_tau[i].append(x_opt)
            bar_rho[i].append(y_opt)
        X[i], Y[i], Z[i] = AdaptedProcess(xv), AdaptedProcess(yv), AdaptedProcess(zv)
    return EnvelopeSet(X, Y, Z, bar_rho, bar_tau)


def build_family(env: EnvelopeSet, kind: str, i: int) -> StrategyFamily:
    """rho_h^i (kind='rho') or tau_h^i (kind='tau').

    The entry for anchor k is the optimizer anchored at the next grid level
    k + 1, not at k.
    """
    if kind == "rho":
        table = env.bar_rho[i]
    elif kind == "tau":
        table = env.bar_tau[i]
    else:
        raise ContractViolation(f"kind must be 'rho' or 'tau', got {kind!r}")
    tree = table[0].tree
    return StrategyFamily(tree, [table[k + 1] for k in range(tree.N)])


@dataclass
class ReactionSlackReport:
    """Worst node-wise gaps between the envelopes and the grid reactions.

    Both slacks are oriented so that they are <= 0; the bound asks for
    each to stay above -2 eps.
    """

    x_slack: float
    y_slack: float
    epsilon: float
    r_h: float
    x_node: int
    y_node: int

    @property
    def bound(self) -> float:
        return -2 * self.epsilon

    @property
    def margins(self) -> tuple[float, float]:
        return self.x_slack + 2 * self.epsilon, self.y_slack + 2 * self.epsilon

    @property
    def precondition(self) -> bool:
        return self.r_h < self.epsilon / 3

    @property
    def passed(self) -> bool:
        return self.x_slack > self.bound - 1e-9 and self.y_slack > self.bound - 1e-9


def reaction_slack(U: PayoffField, i: int, rho_h: StrategyFamily, tau_h: StrategyFamily, eps: float,
                   env: EnvelopeSet | None = None) -> ReactionSlackReport:
    """Compare X^i_t with E_t[U^i(t, tau_h(t))] and Y^i_t with E_t[U^i(rho_h(t), t)] at every node."""
    tree = U.tree
    env = env or build_envelopes(U)
    sign = 1.0 if SENSES[i][0] == "inf" else -1.0
    gx = np.empty(tree.n_nodes)
    gy = np.empty(tree.n_nodes)
    t_all = np.arange(tree.n_scenarios)
    for t in range(tree.N + 1):
        sl = tree.level_slice(t)
        ex = condition_scenarios(tree, U.scen[i - 1, t, tau_h.times[t], t_all], t)
        ey = condition_scenarios(tree, U.scen[i - 1, rho_h.times[t], t, t_all], t)
        gx[sl] = sign * (env.X[i].values[sl] - ex)
        gy[sl] = sign * (ey - env.Y[i].values[sl])
    r_h = empirical_modulus(U)(tree.grid.h)
    return ReactionSlackReport(float(gx.min()), float(gy.min()), eps, r_h, int(gx.argmin()), int(gy.argmin()))
