"""Independent reference computations used by the tests.

Nothing here calls the backward recursion, the multinomial enumeration or the
sampler under test; values are obtained by brute force instead.
"""

import itertools
from functools import partial

import numpy as np

from gxmfg.games import GameModel, contact_scaling


def deterministic_policies(T, n_states, n_actions):
    for flat in itertools.product(range(n_actions), repeat=T * n_states):
        yield np.array(flat, dtype=int).reshape(T, n_states) if T else np.zeros((0, n_states), int)


def rollout_return(rewards, kernels, start_dist, t0, actions):
    """Expected reward from ``t0`` on for a deterministic policy, by forward propagation."""
    T = len(rewards)
    dist = np.asarray(start_dist, dtype=float)
    total = 0.0
    for t in range(t0, T):
        a = actions[t - t0]
        total += sum(dist[x] * rewards[t][x][a[x]] for x in range(len(dist)))
        nxt = np.zeros_like(dist)
        for x in range(len(dist)):
            nxt += dist[x] * np.asarray(kernels[t][x][a[x]])
        dist = nxt
    return total


def brute_force_q(rewards, kernels):
    """``Q[t, x, u]`` = best expected return after taking ``u`` in ``x`` at time ``t``."""
    T = len(rewards)
    X = len(rewards[0])
    U = len(rewards[0][0])
    Q = np.zeros((T + 1, X, U))
    for t in range(T):
        for x in range(X):
            for u in range(U):
                nxt = np.asarray(kernels[t][x][u])
                best = max(rollout_return(rewards, kernels, nxt, t + 1, pi)
                           for pi in deterministic_policies(T - t - 1, X, U))
                Q[t, x, u] = rewards[t][x][u] + best
    return Q


def scalar_tables(model, neighborhoods, degree, T):
    """Reward and kernel tables built one entry at a time through the scalar API."""
    X, U = model.n_states, model.n_actions
    rewards = [[[model.reward(x, u, neighborhoods[t]) for u in range(U)] for x in range(X)]
               for t in range(T)]
    kernels = [[[model.transition(x, u, neighborhoods[t], degree) for u in range(U)]
                for x in range(X)] for t in range(T)]
    return rewards, kernels


def neighbour_sequence_tables(model, core_nb, k):
    """Expected reward/kernel for a degree-``k`` agent by enumerating every
    ordered tuple of neighbour states (not compositions)."""
    X, U = model.n_states, model.n_actions
    r = np.zeros((X, U))
    P = np.zeros((X, U, X))
    for seq in itertools.product(range(X), repeat=k):
        prob = np.prod([core_nb[s] for s in seq])
        G = np.bincount(seq, minlength=X) / k
        for x in range(X):
            for u in range(U):
                r[x, u] += prob * model.reward(x, u, G)
                P[x, u] += prob * model.transition(x, u, G, k)
    return r, P


def _toy_kernel(G, degree, A, B):
    scale = contact_scaling(degree)[..., None, None, None] if np.ndim(degree) else contact_scaling(degree)
    raw = A + G[..., None, None, 1:2] * B * scale
    return raw / raw.sum(axis=-1, keepdims=True)


def _toy_reward(G, C, D):
    return C + np.einsum("...y,xuy->...xu", G, D)


def random_game(rng, n_states=2, n_actions=2, T=3):
    """A game whose kernel and reward depend on the neighbourhood and degree."""
    A = rng.uniform(0.05, 1.0, (n_states, n_actions, n_states))
    B = rng.uniform(0.0, 1.0, (n_states, n_actions, n_states))
    C = rng.normal(size=(n_states, n_actions))
    D = rng.normal(size=(n_states, n_actions, n_states))
    mu0 = rng.dirichlet(np.ones(n_states))
    names = tuple(f"s{i}" for i in range(n_states))
    acts = tuple(f"a{i}" for i in range(n_actions))
    return GameModel("toy", names, acts, T, mu0, partial(_toy_kernel, A=A, B=B),
                     partial(_toy_reward, C=C, D=D))


def _fixed_kernel(G, degree, P):
    return np.broadcast_to(P, G.shape[:-1] + P.shape).copy()


def _fixed_reward(G, R):
    return np.broadcast_to(R, G.shape[:-1] + R.shape).copy()


def fixed_game(P, R, mu0, T, name="fixed"):
    """Game whose kernel and reward ignore the neighbourhood entirely."""
    P = np.asarray(P, dtype=float)
    R = np.asarray(R, dtype=float)
    X, U = R.shape
    return GameModel(name, tuple(f"s{i}" for i in range(X)), tuple(f"a{i}" for i in range(U)),
                     T, mu0, partial(_fixed_kernel, P=P), partial(_fixed_reward, R=R))


def identity_game(n_states=2, n_actions=2, T=5, mu0=None):
    P = np.zeros((n_states, n_actions, n_states))
    for x in range(n_states):
        P[x, :, x] = 1.0
    mu0 = np.full(n_states, 1.0 / n_states) if mu0 is None else mu0
    return fixed_game(P, np.zeros((n_states, n_actions)), mu0, T, "identity")
