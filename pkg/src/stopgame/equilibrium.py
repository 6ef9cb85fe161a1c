"""Constructive epsilon-Nash equilibria for the stopping game.

Zero-sum: the Dynkin saddle on (X, Y, Z) paired with the grid reaction
families. Non-zero-sum: two auxiliary zero-sum games G^1, G^2, the one-sided
values W^1, W^2, the hitting times mu_1, mu_2, and a piecewise assembly that
switches into the punishing zero-sum play delta after mu_1 ^ mu_2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynkin import DynkinSolution, check_submartingale, solve
from .envelopes import EnvelopeSet, build_envelopes, build_family
from .errors import ContractViolation
from .filtration import AdaptedProcess, FilteredTree, condition_scenarios
from .payoff import Modulus, PayoffField, empirical_modulus
from .stopping import (StoppingStrategy, StoppingTime, StrategyFamily, first_entry,
                       validate_strategy)
from .verify import GapReport, best_response, nash_gap

HIT_TOL = 1e-12


@dataclass
class DeltaCondition:
    name: str
    player: int
    value: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "player": self.player, "value": self.value,
                "threshold": self.threshold, "passed": self.passed}


@dataclass
class EquilibriumBundle:
    mode: str
    rho: StoppingStrategy
    tau: StoppingStrategy
    epsilon: float
    h: float
    delta: float
    mu1: StoppingTime | None = None
    mu2: StoppingTime | None = None
    envelopes: EnvelopeSet | None = None
    games: dict[int, DynkinSolution] = field(default_factory=dict)
    W: dict[int, AdaptedProcess] = field(default_factory=dict)
    delta_report: list[DeltaCondition] = field(default_factory=list)
    preconditions: dict[str, bool] = field(default_factory=dict)
    r_h: float = 0.0
    submartingale: dict[int, float] = field(default_factory=dict)
    gaps: GapReport | None = None

    @property
    def bound(self) -> float:
        """The certified multiple of epsilon: 5 eps zero-sum, 18 eps otherwise."""
        return (5 if self.mode == "zero-sum" else 18) * self.epsilon


def build_W(U: PayoffField, tau_h2: StrategyFamily, rho_h1: StrategyFamily) -> tuple[AdaptedProcess, AdaptedProcess]:
    """W^1_t = E_t[U^1(t, tau_h^2(t))] and W^2_t = E_t[U^2(rho_h^1(t), t)]."""
    tree = U.tree
    s = np.arange(tree.n_scenarios)
    w1 = np.empty(tree.n_nodes)
    w2 = np.empty(tree.n_nodes)
    for t in range(tree.N + 1):
        sl = tree.level_slice(t)
        w1[sl] = condition_scenarios(tree, U.scen[0, t, tau_h2.times[t], s], t)
        w2[sl] = condition_scenarios(tree, U.scen[1, rho_h1.times[t], t, s], t)
    return AdaptedProcess(w1), AdaptedProcess(w2)


def hitting_mu(tree: FilteredTree, v: AdaptedProcess, W: AdaptedProcess, eps: float) -> StoppingTime:
    """First entry into {v <= W + eps}."""
    region = v.values <= W.values + eps + HIT_TOL
    return StoppingTime.from_times(tree, first_entry(tree, region, 0), 0)


def _shift(times: np.ndarray, steps: int, N: int) -> np.ndarray:
    return np.minimum(times + steps, N)


def _mean_abs_jump(tree: FilteredTree, proc: AdaptedProcess, mu: np.ndarray, steps: int) -> float:
    jump = proc.along(tree, _shift(mu, steps, tree.N)) - proc.along(tree, mu)
    return float(tree.scenario_prob @ np.abs(jump))


def choose_delta(U: PayoffField, eps: float, mu1: StoppingTime, mu2: StoppingTime,
                 W: dict[int, AdaptedProcess], env: EnvelopeSet, games: dict[int, DynkinSolution],
                 delta: float | None = None, modulus: Modulus | None = None):
    """Pick delta (default h) and report the five closeness conditions per player.

    The report is informational: failing conditions loosen the error
    budget but do not stop the construction.
    """
    tree = U.tree
    h = tree.grid.h
    delta = h if delta is None else delta
    steps = tree.grid.steps(delta)
    r = modulus or empirical_modulus(U)
    m = {1: mu1.times, 2: mu2.times}
    # the process each player's reaction value is read from, at the other player's hitting time
    reaction_value = {1: env.Y[1], 2: env.X[2]}
    report = []
    for i, other in ((1, 2), (2, 1)):
        mu_t = m[i] * h
        gap_to_grid = (np.floor(mu_t / h + 1e-9) + 1) * h - mu_t
        p_close = float(tree.scenario_prob @ (gap_to_grid < 2 * delta))
        osc = U.oscillation(i)
        report += [
            DeltaCondition("r(delta) < eps", i, r(delta), eps, r(delta) < eps),
            DeltaCondition(f"E|W{i}(mu{i}+delta) - W{i}(mu{i})| < eps", i,
                           _mean_abs_jump(tree, W[i], m[i], steps), eps,
                           _mean_abs_jump(tree, W[i], m[i], steps) < eps),
            DeltaCondition(f"P(next grid after mu{i} within 2 delta) < eps/osc", i, p_close,
                           eps / osc if osc > 0 else float("inf"), p_close * osc < eps),
            DeltaCondition(f"E|reaction value at mu{other}+delta - at mu{other}| < eps", i,
                           _mean_abs_jump(tree, reaction_value[i], m[other], steps), eps,
                           _mean_abs_jump(tree, reaction_value[i], m[other], steps) < eps),
            DeltaCondition(f"E|v{i}(mu{i}+delta) - v{i}(mu{i})| < eps", i,
                           _mean_abs_jump(tree, games[i].value, m[i], steps), eps,
                           _mean_abs_jump(tree, games[i].value, m[i], steps) < eps),
        ]
    return delta, report


def assemble_nonzero_sum(U: PayoffField, eps: float, delta: float | None = None,
                         verify: bool = True) -> EquilibriumBundle:
    if not eps > 0:
        raise ContractViolation(f"epsilon must be positive, got {eps}")
    tree = U.tree
    N = tree.N
    env = build_envelopes(U)
    rho_h = {i: build_family(env, "rho", i) for i in (1, 2)}
    tau_h = {i: build_family(env, "tau", i) for i in (1, 2)}
    W1, W2 = build_W(U, tau_h[2], rho_h[1])
    W = {1: W1, 2: W2}
    games = {i: solve(tree, env.X[i], env.Y[i], env.Z[i], orientation=i) for i in (1, 2)}
    mu1 = hitting_mu(tree, games[1].value, W1, eps)
    mu2 = hitting_mu(tree, games[2].value, W2, eps)

    modulus = empirical_modulus(U)
    delta, report = choose_delta(U, eps, mu1, mu2, W, env, games, delta, modulus)
    d = tree.grid.steps(delta)

    m1, m2 = mu1.times, mu2.times
    first1 = m1 <= m2
    # saddle pairs of G^1 and G^2 restarted delta after the hitting times
    _, tau_g1 = games[1].saddle_from(_shift(m1, d, N))
    rho_g2, _ = games[2].saddle_from(_shift(m2, d, N))

    rho0 = np.where(first1, m1, rho_g2.times)
    tau0 = np.where(first1, tau_g1.times, m2)
    switched = np.arange(N)[:, None] >= (np.minimum(m1, m2) + d)[None, :]
    rho1 = np.where(switched & ~first1, rho_h[2].times[:N], rho_h[1].times[:N])
    tau1 = np.where(switched & first1, tau_h[1].times[:N], tau_h[2].times[:N])

    try:
        rho = StoppingStrategy(StoppingTime.from_times(tree, rho0, 0), StrategyFamily.from_times(tree, rho1))
        tau = StoppingStrategy(StoppingTime.from_times(tree, tau0, 0), StrategyFamily.from_times(tree, tau1))
    except ContractViolation as exc:
        raise RuntimeError(f"assembled strategies are not admissible: {exc}") from exc
    problems = validate_strategy(rho, "rho*") + validate_strategy(tau, "tau*")
    if problems:
        raise RuntimeError("assembled strategies are not admissible: " + "; ".join(problems))

    r_h = modulus(tree.grid.h)
    bundle = EquilibriumBundle(
        "nonzero-sum", rho, tau, eps, tree.grid.h, delta, mu1, mu2, env, games, W, report,
        {"r(h) < eps/3": r_h < eps / 3}, r_h,
        {1: check_submartingale(tree, games[1].value, mu1), 2: check_submartingale(tree, games[2].value, mu2)},
    )
    if verify:
        bundle.gaps = nash_gap(U, rho, tau)
    return bundle


def assemble_zero_sum(U: PayoffField, eps: float, verify: bool = True) -> EquilibriumBundle:
    if not U.is_zero_sum(1e-12):
        raise ContractViolation("zero-sum mode needs U^2 = -U^1 entry-wise")
    if not eps > 0:
        raise ContractViolation(f"epsilon must be positive, got {eps}")
    tree = U.tree
    env = build_envelopes(U)
    rho_h = build_family(env, "rho", 1)
    tau_h = build_family(env, "tau", 1)
    game = solve(tree, env.X[1], env.Y[1], env.Z[1], orientation=1)
    rho0, tau0 = game.saddle
    rho = StoppingStrategy(rho0, rho_h)
    tau = StoppingStrategy(tau0, tau_h)
    problems = validate_strategy(rho, "rho") + validate_strategy(tau, "tau")
    if problems:
        raise RuntimeError("assembled strategies are not admissible: " + "; ".join(problems))
    r_h = empirical_modulus(U)(tree.grid.h)
    bundle = EquilibriumBundle("zero-sum", rho, tau, eps, tree.grid.h, tree.grid.h, envelopes=env,
                               games={1: game}, preconditions={"r(h) < eps/3": r_h < eps / 3}, r_h=r_h)
    if verify:
        bundle.gaps = nash_gap(U, rho, tau)
    return bundle


def subgame_deviation_slack(U: PayoffField, sigma: StoppingTime, eps: float,
                        env: EnvelopeSet | None = None) -> float:
    """max over sigma's boundary of (best sub-game deviation of player 1 against
    (tau_sigma, tau_h)) - v_sigma - 4 eps. Non-positive means the bound holds."""
    if not U.is_zero_sum(1e-12):
        raise ContractViolation("the sub-game bound is stated for zero-sum payoffs")
    tree = U.tree
    env = env or build_envelopes(U)
    game = solve(tree, env.X[1], env.Y[1], env.Z[1], orientation=1)
    _, tau_sigma = game.saddle_from(sigma)
    opponent = StoppingStrategy(tau_sigma, build_family(env, "tau", 1))
    br = best_response(U, 1, opponent)
    nodes = sigma.boundary()
    return float(np.max(br.process[nodes] - game.value.values[nodes] - 4 * eps))
