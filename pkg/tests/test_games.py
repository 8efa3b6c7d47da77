import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gxmfg.games import (AWARE, CORE, DEFAULT_K_MAX, SPREAD_NO, SPREAD_YES, UNAWARE, contact_scaling,
                         make_game, make_rs, make_sir, make_sis)

DEGREES = list(range(1, 11)) + [CORE]


def test_sis_defaults():
    m = make_sis()
    assert m.params == dict(tau_I=0.2, tau_R=0.05, T=500, mu0_I=0.5, c_I=1.0, c_P=0.5)
    assert m.horizon == 500
    np.testing.assert_allclose(m.mu0, [0.5, 0.5])
    assert m.states == ("S", "I") and m.actions == ("Pbar", "P")


def test_sir_defaults():
    m = make_sir()
    assert m.params == dict(tau_I=0.05, tau_R=0.01, T=500, mu0_I=0.1, c_I=1.0, c_P=0.25)
    np.testing.assert_allclose(m.mu0, [0.9, 0.1, 0.0])


def test_rs_defaults():
    m = make_rs()
    assert m.params["tau_I"] == 0.3 and m.params["c_P"] == 0.8 and m.params["r_P"] == 0.5
    assert m.horizon == 50
    np.testing.assert_allclose(m.mu0, [0.9, 0.1, 0.0, 0.0])
    assert DEFAULT_K_MAX == {"sis": 8, "sir": 8, "rs": 6}


def test_sis_core_infection():
    p = make_sis().transition(0, 0, [0.5, 0.5], CORE)
    np.testing.assert_allclose(p, [0.9, 0.1], atol=1e-15)


def test_sis_degree_two_infection():
    p = make_sis().transition(0, 0, [0.5, 0.5], 2)
    np.testing.assert_allclose(p, [1 - 0.1 * math.tanh(0.5), 0.1 * math.tanh(0.5)], rtol=1e-12)
    assert p[1] == pytest.approx(0.04621, abs=1e-5)


def test_sis_protected_and_recovery():
    m = make_sis()
    np.testing.assert_array_equal(m.transition(0, 1, [0.0, 1.0], CORE), [1.0, 0.0])
    for u in range(2):
        np.testing.assert_allclose(m.transition(1, u, [0.3, 0.7], 4), [0.05, 0.95])


def test_sir_transitions():
    m = make_sir()
    for u in range(2):
        for k in DEGREES:
            np.testing.assert_array_equal(m.transition(2, u, [0.2, 0.5, 0.3], k), [0, 0, 1])
    np.testing.assert_allclose(m.transition(1, 1, [0.2, 0.5, 0.3], CORE), [0, 0.99, 0.01])


def test_rs_transitions():
    m = make_rs()
    G = np.array([0.2, 0.3, 0.1, 0.0])
    np.testing.assert_array_equal(m.transition(UNAWARE, 1, G, 3), [1, 0, 0, 0])
    np.testing.assert_array_equal(m.transition(AWARE, 0, G, 3), [0, 0, 1, 0])
    np.testing.assert_array_equal(m.transition(AWARE, 1, G, 3), [0, 0, 0, 1])
    for x in (SPREAD_NO, SPREAD_YES):
        for u in range(2):
            np.testing.assert_array_equal(m.transition(x, u, G, CORE), [0, 1, 0, 0])
    p = m.transition(UNAWARE, 0, [0.5, 0.0, 0.0, 0.5], CORE)
    np.testing.assert_allclose(p, [0.85, 0.15, 0, 0])


def test_rs_reward():
    m = make_rs()
    assert m.reward(SPREAD_YES, 0, [1, 0, 0, 0]) == pytest.approx(0.5)
    assert m.reward(SPREAD_YES, 1, [0, 0, 0.5, 0.5]) == pytest.approx(-0.8)
    assert m.reward(AWARE, 1, [1, 0, 0, 0]) == 0.0
    literal = make_rs(reward_mass_on="aware")
    assert literal.reward(SPREAD_YES, 0, [0, 1, 0, 0]) == pytest.approx(0.5)
    assert literal.reward(SPREAD_YES, 0, [1, 0, 0, 0]) == 0.0


@pytest.mark.parametrize("factory", [make_sis, make_sir, make_rs])
def test_kernels_are_stochastic(factory):
    m = factory()
    rng = np.random.default_rng(0)
    Gs = rng.dirichlet(np.ones(m.n_states), size=100)
    for k in DEGREES:
        P = m.transition_tensor(Gs, k)
        assert P.shape == (100, m.n_states, m.n_actions, m.n_states)
        assert np.all(P >= 0) and np.all(P <= 1)
        np.testing.assert_allclose(P.sum(axis=-1), 1.0, atol=1e-9)
        assert np.all(np.isfinite(m.reward_tensor(Gs)))


@pytest.mark.parametrize("factory", [make_sis, make_sir, make_rs])
def test_batched_matches_scalar(factory):
    m = factory()
    rng = np.random.default_rng(1)
    Gs = rng.dirichlet(np.ones(m.n_states), size=7)
    ks = np.array([1, 2, 3, CORE, 5, 8, 0])
    P = m.transition_tensor(Gs, ks)
    R = m.reward_tensor(Gs)
    for i in range(7):
        for x in range(m.n_states):
            for u in range(m.n_actions):
                np.testing.assert_array_equal(P[i, x, u], m.transition(x, u, Gs[i], ks[i]))
                assert R[i, x, u] == m.reward(x, u, Gs[i])


def test_contact_scaling():
    assert contact_scaling(0) == 0.0
    assert contact_scaling(CORE) == 1.0
    ks = np.arange(0, 60)
    assert np.all(np.diff(contact_scaling(ks)) > 0)
    assert contact_scaling(50) > 0.999


@given(st.sampled_from([make_sis, make_sir]), st.integers(0, 2), st.integers(0, 1),
       st.floats(0, 1))
def test_epidemic_reward_sign(factory, x, u, g):
    m = factory()
    if x >= m.n_states:
        return
    G = np.zeros(m.n_states)
    G[0], G[1] = 1 - g, g
    r = m.reward(x, u, G)
    assert r <= 0
    assert (r == 0) == (x != 1 and u != 1)


def test_degree_zero_never_infected():
    m = make_sis()
    np.testing.assert_array_equal(m.transition(0, 0, [0.0, 0.0], 0), [1.0, 0.0])


@pytest.mark.parametrize("kwargs", [dict(tau_I=1.5), dict(tau_R=-0.1), dict(c_I=-1), dict(mu0_I=2)])
def test_parameter_domain(kwargs):
    with pytest.raises(ValueError):
        make_sis(**kwargs)


def test_make_game_unknown():
    with pytest.raises(ValueError):
        make_game("sird")
    with pytest.raises(ValueError):
        make_rs(reward_mass_on="both")


def test_with_horizon():
    m = make_sir().with_horizon(7)
    assert m.horizon == 7 and m.params["T"] == 7
