"""Best responses against a fixed stopping strategy and Nash-gap certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .envelopes import anchored_value
from .errors import ContractViolation
from .filtration import condition_scenarios
from .payoff import PayoffField, evaluate_game
from .stopping import (StoppingStrategy, StoppingTime, StrategyFamily, count_stopping_times,
                       enumerate_stopping_times, validate_strategy)

TIE_TOL = 1e-12
ENUM_CAP = 10**6


@dataclass
class BestResponse:
    value: float
    strategy: StoppingStrategy
    # value of the best deviation from each node, given nobody has stopped yet
    process: np.ndarray


def _reaction_table(U: PayoffField, i: int, s: int):
    """Best reaction after the opponent stopped at level s < N.

    Returns the value on level s and the optimal stopping time (floor s + 1).
    """
    if i == 1:
        val, opt = anchored_value(U, 1, s, "second", "sup", floor=s + 1)
    else:
        val, opt = anchored_value(U, 2, s, "first", "sup", floor=s + 1)
    return U.tree.step_back(val.values, s + 1), opt


def best_response(U: PayoffField, i: int, opponent: StoppingStrategy) -> BestResponse:
    """Exact sup of u^i over all strategies of player i against ``opponent``.

    Phase A runs while neither player has stopped; once the opponent's first
    stop occurs at level s the deviator's best continuation is the anchored
    Snell value with floor s + 1.
    """
    problems = validate_strategy(opponent, "opponent")
    if problems:
        raise ContractViolation("; ".join(problems))
    tree = U.tree
    N = tree.N
    # P[j, k] is player i's payoff when the deviator's time is j and the opponent's is k
    P = U.scen[0] if i == 1 else np.swapaxes(U.scen[1], 0, 1)
    s_all = np.arange(tree.n_scenarios)

    entries = []
    phase_b = []
    for s in range(N):
        val, opt = _reaction_table(U, i, s)
        phase_b.append(val)
        entries.append(opt)

    A = np.full(tree.n_nodes, np.nan)
    stop = tree.is_leaf.copy()
    sl = tree.level_slice(N)
    A[sl] = U.tables[i - 1][N][N]
    for k in range(N - 1, -1, -1):
        sl = tree.level_slice(k)
        cont = tree.step_back(A[tree.level_slice(k + 1)], k + 1)
        early = condition_scenarios(tree, P[k, opponent.reaction.times[k], s_all], k)
        opp = opponent.first.stop[sl]
        stop_val = np.where(opp, U.tables[i - 1][k][k], early)
        cont_val = np.where(opp, phase_b[k], cont)
        here = stop_val >= cont_val - TIE_TOL
        stop[sl] = here
        A[sl] = np.where(here, stop_val, cont_val)

    strategy = StoppingStrategy(StoppingTime(tree, stop, 0), StrategyFamily(tree, entries))
    return BestResponse(float(A[0]), strategy, A)


def enumerate_best_response(U: PayoffField, i: int, opponent: StoppingStrategy,
                            cap: int = ENUM_CAP) -> float:
    """Brute-force sup of u^i: every first stopping time of the deviator
    combined with every reaction at each node where the opponent stops first.
    """
    tree = U.tree
    N = tree.N
    s_all = np.arange(tree.n_scenarios)
    t0 = opponent.first.times
    stops = [int(n) for n in opponent.first.boundary() if tree.level[n] < N]

    n_first = count_stopping_times(tree)
    total = n_first
    for b in stops:
        total *= count_stopping_times(tree, tree.level[b] + 1, b)
    if total > cap:
        raise ContractViolation(f"{total} deviations exceed the enumeration cap {cap}")

    firsts = enumerate_stopping_times(tree, cap=cap)
    options = [enumerate_stopping_times(tree, tree.level[b] + 1, b, cap=cap) for b in stops]
    opp_react = opponent.reaction.times[firsts, s_all[None, :]]
    best = -np.inf
    for choice in itertools.product(*(range(len(o)) for o in options)):
        react = np.full(tree.n_scenarios, N, dtype=np.int64)
        for b, opts, c in zip(stops, options, choice):
            react[tree.scenarios_below(b)] = opts[c]
        own = np.where(firsts <= t0, firsts, react[None, :])
        other = np.where(t0 <= firsts, t0, opp_react)
        if i == 1:
            vals = U.scen[0][own, other, s_all]
        else:
            vals = U.scen[1][other, own, s_all]
        best = max(best, float((vals @ tree.scenario_prob).max()))
    return best


@dataclass
class GapReport:
    """How much each player gains by the best unilateral deviation."""

    gap1: float
    gap2: float
    u1: float
    u2: float
    best1: float
    best2: float
    method: str
    witness1: StoppingStrategy | None = None
    witness2: StoppingStrategy | None = None

    def certifies(self, eps: float) -> bool:
        return self.gap1 <= eps and self.gap2 <= eps

    def as_dict(self) -> dict:
        return {"gap1": self.gap1, "gap2": self.gap2, "u1": self.u1, "u2": self.u2,
                "best_response1": self.best1, "best_response2": self.best2, "method": self.method}


def nash_gap(U: PayoffField, rho: StoppingStrategy, tau: StoppingStrategy, method: str = "dp") -> GapReport:
    problems = validate_strategy(rho, "rho") + validate_strategy(tau, "tau")
    if problems:
        raise ContractViolation("; ".join(problems))
    u1 = evaluate_game(U, 1, rho, tau)
    u2 = evaluate_game(U, 2, rho, tau)
    if method == "dp":
        br1, br2 = best_response(U, 1, tau), best_response(U, 2, rho)
        b1, b2, w1, w2 = br1.value, br2.value, br1.strategy, br2.strategy
    elif method == "enumeration":
        b1, b2 = enumerate_best_response(U, 1, tau), enumerate_best_response(U, 2, rho)
        w1 = w2 = None
    else:
        raise ContractViolation(f"method must be 'dp' or 'enumeration', got {method!r}")
    return GapReport(b1 - u1, b2 - u2, u1, u2, b1, b2, method, w1, w2)
