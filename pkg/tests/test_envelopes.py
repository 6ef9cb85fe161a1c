import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stopgame import anchored_value, build_envelopes, build_family, empirical_modulus, generate, reaction_slack
from stopgame.filtration import condition_scenarios
from stopgame.stopping import enumerate_stopping_times

from conftest import TOL, const_field, det2_field


def enumerated_anchor(U, i, t, side, sense):
    """Anchored value by trying every stopping time >= t below each level-t node."""
    tree = U.tree
    pick = min if sense == "inf" else max
    out = []
    for n in tree.nodes_at(t):
        sl = tree.scenarios_below(n)
        p = tree.scenario_prob[sl]
        idx = np.arange(sl.start, sl.stop)
        best = []
        for times in enumerate_stopping_times(tree, floor=t, root=n):
            if side == "first":
                vals = U.scen[i - 1, t, times, idx]
            else:
                vals = U.scen[i - 1, times, t, idx]
            best.append(float(p @ vals / p.sum()))
        out.append(pick(best))
    return np.array(out)


def test_anchored_value_const():
    U = const_field(2.0)
    val, opt = anchored_value(U, 1, 1, "first", "inf")
    assert np.allclose(val.values, 2.0)
    assert np.all(opt.times == 1)


def test_anchored_value_det2():
    U = det2_field()
    for t in range(3):
        x, x_opt = anchored_value(U, 1, t, "first", "inf")
        y, y_opt = anchored_value(U, 1, t, "second", "sup")
        assert x.values.tolist() == [t] and x_opt.times.tolist() == [t]
        assert y.values.tolist() == [2] and y_opt.times.tolist() == [2]
        assert x.values[0] == enumerated_anchor(U, 1, t, "first", "inf")[0]
        assert y.values[0] == enumerated_anchor(U, 1, t, "second", "sup")[0]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_anchored_value_matches_enumeration(seed):
    U = generate(seed, 3, 0.5, 2, 3.0, 5.0, ragged=True).payoff
    for i in (1, 2):
        for t in range(U.tree.N + 1):
            for side in ("first", "second"):
                for sense in ("inf", "sup"):
                    val, _ = anchored_value(U, i, t, side, sense)
                    assert np.allclose(val.values, enumerated_anchor(U, i, t, side, sense), atol=TOL)


def test_build_envelopes_examples():
    env = build_envelopes(const_field(1.0))
    for i in (1, 2):
        for proc in (env.X[i], env.Y[i], env.Z[i]):
            assert np.allclose(proc.values, 1.0)
    env = build_envelopes(det2_field())
    assert env.X[1].values.tolist() == [0, 1, 2]
    assert env.Y[1].values.tolist() == [2, 2, 2]
    assert env.Z[1].values.tolist() == [0, 1, 2]
    # zero-sum: player 2's envelopes are the negatives
    assert np.allclose(env.X[2].values, -env.X[1].values)
    assert np.allclose(env.Y[2].values, -env.Y[1].values)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_envelope_invariants(seed):
    U = generate(seed, 4, 0.5, 3, 2.0, 5.0, ragged=True).payoff
    tree = U.tree
    env = build_envelopes(U)
    X1, Y1, Z1 = env.X[1].values, env.Y[1].values, env.Z[1].values
    X2, Y2, Z2 = env.X[2].values, env.Y[2].values, env.Z[2].values
    assert np.all(X1 <= Z1 + TOL) and np.all(Z1 <= Y1 + TOL)
    assert np.all(Y2 <= Z2 + TOL) and np.all(Z2 <= X2 + TOL)
    s = np.arange(tree.n_scenarios)
    for i in (1, 2):
        for n in range(tree.N + 1):
            sl = tree.level_slice(n)
            # optimizers attain their values exactly
            got_x = condition_scenarios(tree, U.scen[i - 1, n, env.bar_tau[i][n].times, s], n)
            got_y = condition_scenarios(tree, U.scen[i - 1, env.bar_rho[i][n].times, n, s], n)
            assert np.allclose(got_x, env.X[i].values[sl], atol=TOL)
            assert np.allclose(got_y, env.Y[i].values[sl], atol=TOL)
            assert np.all(env.bar_tau[i][n].times >= n)
    # dynamic-programming consistency of one frozen slice
    t = 1
    val, _ = anchored_value(U, 1, t, "first", "inf", floor=t)
    nxt, _ = anchored_value(U, 1, t, "first", "inf", floor=t + 1)
    stop_now = U.tables[0][t][t]
    assert np.allclose(val.values, np.minimum(stop_now, tree.step_back(nxt.values, t + 1)), atol=1e-12)


def test_build_family_examples():
    env = build_envelopes(const_field(1.0, N=3))
    fam = build_family(env, "rho", 1)
    for k in range(3):
        assert np.all(fam.times[k] == k + 1)
    env = build_envelopes(det2_field())
    assert build_family(env, "rho", 1).times[:2].ravel().tolist() == [2, 2]
    assert build_family(env, "tau", 1).times[:2].ravel().tolist() == [1, 2]
    for kind in ("rho", "tau"):
        assert build_family(env, kind, 2).violations() == []


def test_reaction_slack_examples():
    U = const_field(1.0)
    env = build_envelopes(U)
    rep = reaction_slack(U, 1, build_family(env, "rho", 1), build_family(env, "tau", 1), 0.3, env)
    assert rep.x_slack == pytest.approx(0) and rep.y_slack == pytest.approx(0)
    assert rep.margins == (pytest.approx(0.6), pytest.approx(0.6))
    assert rep.passed

    U = det2_field()
    env = build_envelopes(U)
    rep = reaction_slack(U, 1, build_family(env, "rho", 1), build_family(env, "tau", 1), 1.01, env)
    # X_t - U(t, t+1) = t - (t+1) = -1 at t < 2; the rho side is exact
    assert rep.x_slack == pytest.approx(-1.0) and rep.y_slack == pytest.approx(0.0)
    assert rep.passed
    rep = reaction_slack(U, 1, build_family(env, "rho", 1), build_family(env, "tau", 1), 0.4, env)
    assert not rep.passed and not rep.precondition


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), L=st.floats(0.1, 4.0))
def test_reaction_slack_holds_when_modulus_is_small(seed, L):
    U = generate(seed, 5, 0.25, 2, L, 5.0, ragged=True).payoff
    eps = 3.0 * empirical_modulus(U)(0.25) + 1e-6
    env = build_envelopes(U)
    for i in (1, 2):
        rep = reaction_slack(U, i, build_family(env, "rho", i), build_family(env, "tau", i), eps, env)
        assert rep.precondition and rep.passed
        # the node-wise gap is at most three grid moduli
        assert min(rep.x_slack, rep.y_slack) >= -3 * rep.r_h - TOL
