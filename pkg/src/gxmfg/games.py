"""Tabular mean field game models with degree-dependent dynamics.

A model exposes its kernel and reward in batched form so that solvers and
simulators can evaluate many neighbourhoods at once:

* ``transition_tensor(G, degree)`` maps neighbourhood distributions of shape
  ``(..., X)`` and degrees of shape ``(...)`` to ``(..., X, U, X')``;
* ``reward_tensor(G)`` maps ``(..., X)`` to ``(..., X, U)``.

Degrees are real numbers; :data:`CORE` (``inf``) marks agents of unbounded
degree.  Rewards follow the maximisation convention, so the epidemic games
return negated costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

CORE = math.inf

KernelFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
RewardFn = Callable[[np.ndarray], np.ndarray]


def contact_scaling(k):
    """``2 / (1 + exp(-k/2)) - 1``: 0 at k=0, increasing, saturating at 1 for the core."""
    k = np.asarray(k, dtype=float)
    with np.errstate(over="ignore"):
        out = 2.0 / (1.0 + np.exp(-0.5 * k)) - 1.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GameModel:
    name: str
    states: tuple[str, ...]
    actions: tuple[str, ...]
    horizon: int
    mu0: np.ndarray
    kernel: KernelFn
    reward_fn: RewardFn
    params: dict | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        mu0 = np.asarray(self.mu0, dtype=float)
        if mu0.shape != (len(self.states),) or np.any(mu0 < 0) or abs(mu0.sum() - 1) > 1e-9:
            raise ValueError(f"mu0 must be a distribution over {len(self.states)} states")
        mu0.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def transition_tensor(self, G, degree=CORE) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        degree = np.broadcast_to(np.asarray(degree, dtype=float), G.shape[:-1])
        return self.kernel(G, degree)

    def reward_tensor(self, G) -> np.ndarray:
        return self.reward_fn(np.asarray(G, dtype=float))

    def transition(self, x: int, u: int, G, degree=CORE) -> np.ndarray:
        """Next-state distribution for a single agent."""
        return self.transition_tensor(G, degree)[x, u]

    def reward(self, x: int, u: int, G) -> float:
        return float(self.reward_tensor(G)[x, u])

    def with_horizon(self, horizon: int) -> "GameModel":
        params = dict(self.params or {}, T=horizon)
        return GameModel(self.name, self.states, self.actions, horizon, self.mu0,
                         self.kernel, self.reward_fn, params)


def _check_rate(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def _check_cost(name, value):
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")


# Epidemic games share state S=0, I=1 and actions Pbar=0 (no protection), P=1.
S, I, R = 0, 1, 2
NO_PROTECT, PROTECT = 0, 1


def _infection_prob(G, degree, tau_I):
    return tau_I * G[..., I] * contact_scaling(degree)


def _epidemic_reward(G, n_states, c_I, c_P):
    shape = G.shape[:-1] + (n_states, 2)
    r = np.zeros(shape)
    r[..., I, :] -= c_I
    r[..., :, PROTECT] -= c_P
    return r


def _sis_kernel(G, degree, tau_I, tau_R):
    P = np.zeros(G.shape[:-1] + (2, 2, 2))
    p_inf = _infection_prob(G, degree, tau_I)
    P[..., S, NO_PROTECT, I] = p_inf
    P[..., S, NO_PROTECT, S] = 1.0 - p_inf
    P[..., S, PROTECT, S] = 1.0
    P[..., I, :, S] = tau_R
    P[..., I, :, I] = 1.0 - tau_R
    return P


def _sir_kernel(G, degree, tau_I, tau_R):
    P = np.zeros(G.shape[:-1] + (3, 2, 3))
    p_inf = _infection_prob(G, degree, tau_I)
    P[..., S, NO_PROTECT, I] = p_inf
    P[..., S, NO_PROTECT, S] = 1.0 - p_inf
    P[..., S, PROTECT, S] = 1.0
    P[..., I, :, R] = tau_R
    P[..., I, :, I] = 1.0 - tau_R
    P[..., R, :, R] = 1.0
    return P


def make_sis(tau_I: float = 0.2, tau_R: float = 0.05, T: int = 500, mu0_I: float = 0.5,
             c_I: float = 1.0, c_P: float = 0.5) -> GameModel:
    """Susceptible-infected-susceptible game with costly protection."""
    _check_rate("tau_I", tau_I)
    _check_rate("tau_R", tau_R)
    _check_rate("mu0_I", mu0_I)
    _check_cost("c_I", c_I)
    _check_cost("c_P", c_P)
    params = dict(tau_I=tau_I, tau_R=tau_R, T=T, mu0_I=mu0_I, c_I=c_I, c_P=c_P)
    return GameModel("sis", ("S", "I"), ("Pbar", "P"), T, [1.0 - mu0_I, mu0_I],
                     partial(_sis_kernel, tau_I=tau_I, tau_R=tau_R),
                     partial(_epidemic_reward, n_states=2, c_I=c_I, c_P=c_P), params)


def make_sir(tau_I: float = 0.05, tau_R: float = 0.01, T: int = 500, mu0_I: float = 0.1,
             c_I: float = 1.0, c_P: float = 0.25) -> GameModel:
    """SIS with an absorbing recovered state R."""
    _check_rate("tau_I", tau_I)
    _check_rate("tau_R", tau_R)
    _check_rate("mu0_I", mu0_I)
    _check_cost("c_I", c_I)
    _check_cost("c_P", c_P)
    params = dict(tau_I=tau_I, tau_R=tau_R, T=T, mu0_I=mu0_I, c_I=c_I, c_P=c_P)
    return GameModel("sir", ("S", "I", "R"), ("Pbar", "P"), T,
                     [1.0 - mu0_I, mu0_I, 0.0], partial(_sir_kernel, tau_I=tau_I, tau_R=tau_R),
                     partial(_epidemic_reward, n_states=3, c_I=c_I, c_P=c_P), params)


# Rumour states: unaware, aware, and the two spreading phases (one per action).
UNAWARE, AWARE, SPREAD_NO, SPREAD_YES = 0, 1, 2, 3


def _rs_kernel(G, degree, tau_I):
    P = np.zeros(G.shape[:-1] + (4, 2, 4))
    p_learn = (tau_I * G[..., SPREAD_YES] * contact_scaling(degree))[..., None]
    P[..., UNAWARE, :, AWARE] = p_learn
    P[..., UNAWARE, :, UNAWARE] = 1.0 - p_learn
    P[..., AWARE, 0, SPREAD_NO] = 1.0
    P[..., AWARE, 1, SPREAD_YES] = 1.0
    P[..., SPREAD_NO, :, AWARE] = 1.0
    P[..., SPREAD_YES, :, AWARE] = 1.0
    return P


def _rs_reward(G, c_P, r_P, gain_state):
    r = np.zeros(G.shape[:-1] + (4, 2))
    gain = -c_P * (G[..., SPREAD_NO] + G[..., SPREAD_YES]) + r_P * G[..., gain_state]
    r[..., SPREAD_YES, :] = gain[..., None]
    return r


def make_rs(tau_I: float = 0.3, T: int = 50, mu0_aware: float = 0.1, c_P: float = 0.8,
            r_P: float = 0.5, reward_mass_on: str = "unaware") -> GameModel:
    """Rumour spreading.

    An aware agent picks an action and enters the matching spreading state,
    then falls back to aware on the next step.  Unaware agents learn the
    rumour at rate ``tau_I`` times the fraction of neighbours in the
    propagating state.  Propagating agents pay ``c_P`` per aware-and-spreading
    neighbour fraction and gain ``r_P`` per fraction of neighbours in
    ``reward_mass_on`` (``"unaware"`` or ``"aware"``).
    """
    _check_rate("tau_I", tau_I)
    _check_rate("mu0_aware", mu0_aware)
    _check_cost("c_P", c_P)
    _check_cost("r_P", r_P)
    if reward_mass_on not in ("unaware", "aware"):
        raise ValueError(f"reward_mass_on must be 'unaware' or 'aware', got {reward_mass_on!r}")
    gain_state = UNAWARE if reward_mass_on == "unaware" else AWARE

    params = dict(tau_I=tau_I, T=T, mu0_aware=mu0_aware, c_P=c_P, r_P=r_P,
                  reward_mass_on=reward_mass_on)
    return GameModel("rs", ("Abar", "A", "Pbar", "P"), ("Pbar", "P"), T,
                     [1.0 - mu0_aware, mu0_aware, 0.0, 0.0], partial(_rs_kernel, tau_I=tau_I),
                     partial(_rs_reward, c_P=c_P, r_P=r_P, gain_state=gain_state), params)


GAMES = {"sis": make_sis, "sir": make_sir, "rs": make_rs}

#: Periphery degree cutoffs used with each game.
DEFAULT_K_MAX = {"sis": 8, "sir": 8, "rs": 6}


def make_game(name: str, **overrides) -> GameModel:
    try:
        factory = GAMES[name]
    except KeyError:
        raise ValueError(f"unknown game {name!r}; choose from {sorted(GAMES)}") from None
    return factory(**overrides)
