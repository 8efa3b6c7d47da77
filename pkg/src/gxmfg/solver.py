"""Hybrid online mirror descent for graphex mean field games.

The first stage runs online mirror descent on ``M`` equivalence classes of
core agents (the latent interval ``[0, alpha_star]`` cut into equal pieces).
The second stage treats each periphery degree ``k <= k_max`` as an ordinary
finite-horizon MDP whose neighbourhood is ``Multinomial(k, core neighbourhood)``
and solves it by backward induction.

Array conventions: time is the second-to-last batch axis; fields carry
``T + 1`` rows (``t = 0..T``), policies and Q tables ``T`` decision rows plus,
for Q, a terminal zero row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy.special import gammaln

from .games import CORE, GameModel
from .graphex import DegreeLaw, Graphex

logger = logging.getLogger(__name__)

DEFAULT_M = 50
DEFAULT_ALPHA_STAR = 5.0
DEFAULT_GAMMA = 50.0
DEFAULT_TAU_MAX = 5000

#: Largest number of neighbourhood compositions enumerated per degree.
COMPOSITION_CAP = 100_000


@dataclass
class CoreField:
    """Core mean field ``values[i, t, x]`` for classes ``i < M`` and ``t = 0..T``."""

    values: np.ndarray
    class_centers: np.ndarray
    class_weight: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]

    def average(self) -> np.ndarray:
        """Equal-weight average over classes, shape ``(T + 1, X)``."""
        return self.values.mean(axis=0)


@dataclass
class PeripheryField:
    """Periphery mean field ``values[k - 1, t, x]`` for degrees ``k = 1..k_max``."""

    values: np.ndarray

    @property
    def k_max(self) -> int:
        return self.values.shape[0]

    def degree(self, k: int) -> np.ndarray:
        return self.values[k - 1]


@dataclass
class PolicyBundle:
    """Core stochastic policies, OMD accumulator and periphery greedy actions.

    Attributes
    ----------
    core : (M, T, X, U) array
    omd_accumulator : (M, T, X, U) array
    periphery : (k_max, T, X) int array or None
        Chosen action per degree, time and state.
    """

    core: np.ndarray
    omd_accumulator: np.ndarray
    periphery: np.ndarray | None = None

    @classmethod
    def uniform(cls, M: int, T: int, n_states: int, n_actions: int) -> "PolicyBundle":
        shape = (M, T, n_states, n_actions)
        return cls(np.full(shape, 1.0 / n_actions), np.zeros(shape))

    def periphery_onehot(self, n_actions: int) -> np.ndarray:
        """Periphery actions as a ``(k_max, T, X, U)`` probability table."""
        return np.eye(n_actions)[self.periphery]


def class_centers(M: int, alpha_star: float) -> np.ndarray:
    width = alpha_star / M
    return (np.arange(M) + 0.5) * width


def initial_core_field(model: GameModel, graphex: Graphex, M: int, alpha_star: float) -> CoreField:
    centers = class_centers(M, alpha_star)
    values = np.zeros((M, model.horizon + 1, model.n_states))
    values[:, 0] = model.mu0
    return CoreField(values, centers, graphex.marginal_factor(centers))


def core_neighborhood(field: CoreField, t: int) -> np.ndarray:
    """Neighbourhood distribution seen by every core class at time ``t``.

    For the separable kernel the latent-weighted average of class fields does
    not depend on the observing class.
    """
    w = field.class_weight
    return w @ field.values[:, t] / w.sum()


def forward_core(model: GameModel, policy: PolicyBundle, graphex: Graphex,
                 M: int, alpha_star: float, T: int | None = None) -> CoreField:
    """Propagate all core classes forward from ``mu0`` under ``policy.core``."""
    T = model.horizon if T is None else T
    field = initial_core_field(model, graphex, M, alpha_star)
    pi = policy.core
    for t in range(T):
        G = core_neighborhood(field, t)
        P = model.transition_tensor(G, CORE)
        # x -> u -> x' per class
        field.values[:, t + 1] = np.einsum("ix,ixu,xuy->iy", field.values[:, t], pi[:, t], P)
    return field


def core_neighborhoods(field: CoreField) -> np.ndarray:
    """Neighbourhoods for every time row of the field, shape ``(T + 1, X)``."""
    w = field.class_weight
    return np.einsum("i,itx->tx", w, field.values) / w.sum()


def backward_induction(rewards: np.ndarray, kernels: np.ndarray,
                       policy: np.ndarray | None = None) -> np.ndarray:
    """Finite-horizon Q values for a tabular MDP.

    Parameters
    ----------
    rewards : (T, X, U) array
    kernels : (T, X, U, X) array
    policy : (..., T, X, U) array, optional
        Evaluate this policy instead of optimising.  Leading batch axes are
        kept in the output.

    Returns
    -------
    (..., T + 1, X, U) array with a zero terminal row.
    """
    T, X, U = rewards.shape
    batch = () if policy is None else policy.shape[:-3]
    Q = np.zeros(batch + (T + 1, X, U))
    for t in range(T - 1, -1, -1):
        if policy is None:
            v_next = Q[t + 1].max(axis=-1)
        else:
            v_next = np.einsum("...xu,...xu->...x", policy[..., t + 1, :, :], Q[..., t + 1, :, :]) \
                if t + 1 < T else np.zeros(batch + (X,))
        Q[..., t, :, :] = rewards[t] + np.einsum("xuy,...y->...xu", kernels[t], v_next)
    return Q


def _game_tables(model: GameModel, neighborhoods: np.ndarray, degree_class, T: int):
    G = neighborhoods[:T]
    return model.reward_tensor(G), model.transition_tensor(G, degree_class)


def q_backward(model: GameModel, neighborhoods, degree_class=CORE, T: int | None = None) -> np.ndarray:
    """Optimal Q table ``(T + 1, X, U)`` against fixed per-time neighbourhoods."""
    T = model.horizon if T is None else T
    rewards, kernels = _game_tables(model, np.asarray(neighborhoods, dtype=float), degree_class, T)
    return backward_induction(rewards, kernels)


def q_evaluate(model: GameModel, neighborhoods, policy: np.ndarray, degree_class=CORE,
               T: int | None = None) -> np.ndarray:
    """Q table of a fixed policy (``policy`` may carry leading class axes)."""
    T = model.horizon if T is None else T
    rewards, kernels = _game_tables(model, np.asarray(neighborhoods, dtype=float), degree_class, T)
    return backward_induction(rewards, kernels, policy)


def softmax(y: np.ndarray) -> np.ndarray:
    z = y - y.max(axis=-1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=-1, keepdims=True)
    return z


def omd_step(policy: PolicyBundle, q: np.ndarray, gamma: float) -> PolicyBundle:
    """``y += gamma * Q``; ``pi = softmax(y)`` row-wise.

    ``q`` has shape ``(M, T, X, U)`` or ``(M, T + 1, X, U)`` (terminal row
    dropped).
    """
    T = policy.core.shape[1]
    y = policy.omd_accumulator + gamma * q[:, :T]
    return PolicyBundle(softmax(y), y, policy.periphery)


def exploitability(model: GameModel, policy: PolicyBundle, field: CoreField,
                   graphex: Graphex | None = None) -> float:
    """Largest best-response gain over core classes at the initial distribution.

    ``graphex`` is accepted for interface symmetry; the field already carries
    the class weights.
    """
    T = policy.core.shape[1]
    G = core_neighborhoods(field)
    rewards, kernels = _game_tables(model, G, CORE, T)
    return _exploitability(model.mu0, rewards, kernels, policy.core)


def _exploitability(mu0, rewards, kernels, core_policy, q_best=None):
    if q_best is None:
        q_best = backward_induction(rewards, kernels)
    q_pi = backward_induction(rewards, kernels, core_policy)
    best = mu0 @ q_best[0].max(axis=-1)
    current = np.einsum("x,ixu,ixu->i", mu0, core_policy[:, 0], q_pi[:, 0])
    return float(np.max(best - current))


@dataclass
class CoreSolution:
    policy: PolicyBundle
    field: CoreField
    exploitability: np.ndarray


def solve_core(model: GameModel, graphex: Graphex, M: int = DEFAULT_M,
               alpha_star: float = DEFAULT_ALPHA_STAR, gamma: float = DEFAULT_GAMMA,
               tau_max: int = DEFAULT_TAU_MAX, T: int | None = None,
               callback=None) -> CoreSolution:
    """Online mirror descent on the discretised core.

    Each iteration propagates the mean field under the current policy, scores
    it, computes the optimal Q table against it and takes one mirror step.
    ``exploitability[tau]`` belongs to the policy used in iteration ``tau``;
    the returned field is generated by the returned policy.
    """
    if tau_max < 1:
        raise ValueError(f"tau_max must be >= 1, got {tau_max}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if not alpha_star > 0:
        raise ValueError(f"alpha_star must be positive, got {alpha_star}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    T = model.horizon if T is None else T
    policy = PolicyBundle.uniform(M, T, model.n_states, model.n_actions)
    trace = np.empty(tau_max)
    for tau in range(tau_max):
        field = forward_core(model, policy, graphex, M, alpha_star, T)
        G = core_neighborhoods(field)
        rewards, kernels = _game_tables(model, G, CORE, T)
        q = backward_induction(rewards, kernels)
        trace[tau] = _exploitability(model.mu0, rewards, kernels, policy.core, q_best=q)
        if callback is not None:
            callback(tau, trace[tau])
        policy = omd_step(policy, np.broadcast_to(q, (M,) + q.shape), gamma)
    field = forward_core(model, policy, graphex, M, alpha_star, T)
    logger.info("core solved: exploitability %.3g -> %.3g", trace[0], trace[-1])
    return CoreSolution(policy, field, trace)


@lru_cache(maxsize=None)
def compositions(k: int, n_parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``n_parts`` summing to ``k``.

    Ordered lexicographically descending, so ``(k, 0, ...)`` comes first.
    """
    if n_parts == 1:
        out = np.array([[k]], dtype=np.int64)
    else:
        rows = [(first,) + tuple(rest)
                for first in range(k, -1, -1)
                for rest in compositions(k - first, n_parts - 1)]
        out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


def periphery_neighborhood_dist(core_nb, k: int, cap: int = COMPOSITION_CAP):
    """Multinomial law of a degree-``k`` neighbourhood drawn from ``core_nb``.

    Returns
    -------
    counts : (C, X) int array
        Every composition of ``k`` into ``X`` parts.
    pmf : (C,) array
    """
    core_nb = np.asarray(core_nb, dtype=float)
    if k < 1:
        raise ValueError(f"degree must be >= 1, got {k}")
    n = len(core_nb)
    if comb(k + n - 1, n - 1) > cap:
        raise MemoryError(f"{comb(k + n - 1, n - 1)} compositions exceed cap {cap}")
    counts = compositions(k, n)
    return counts, multinomial_pmf(counts, core_nb)


def multinomial_pmf(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    k = counts.sum(axis=-1)
    log_coef = gammaln(k + 1) - gammaln(counts + 1).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = np.where(counts > 0, counts * np.log(probs), 0.0)
    return np.exp(log_coef + log_terms.sum(axis=-1))


def periphery_tables(model: GameModel, core_nbs: np.ndarray, k: int, T: int):
    """Expected rewards ``(T, X, U)`` and kernels ``(T, X, U, X)`` for degree ``k``."""
    counts = compositions(k, model.n_states)
    G = counts / k
    r_atoms = model.reward_tensor(G)                 # (C, X, U)
    P_atoms = model.transition_tensor(G, float(k))   # (C, X, U, X)
    pmf = np.stack([periphery_neighborhood_dist(core_nbs[t], k)[1] for t in range(T)])
    return (np.einsum("tc,cxu->txu", pmf, r_atoms),
            np.einsum("tc,cxuy->txuy", pmf, P_atoms))


def forward_policy(mu0: np.ndarray, kernels: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """State distributions ``(T + 1, X)`` of one agent under a stochastic policy."""
    T = kernels.shape[0]
    mu = np.empty((T + 1, len(mu0)))
    mu[0] = mu0
    for t in range(T):
        mu[t + 1] = np.einsum("x,xu,xuy->y", mu[t], policy[t], kernels[t])
    return mu


@dataclass
class PeripherySolution:
    actions: np.ndarray
    field: PeripheryField
    q: np.ndarray


def solve_periphery(model: GameModel, core_field: CoreField, graphex: Graphex | None = None,
                    k_max: int = 8, T: int | None = None) -> PeripherySolution:
    """Best responses and mean fields of degree-``k`` agents for ``k = 1..k_max``.

    Greedy actions break ties towards the lowest action index.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    T = core_field.values.shape[1] - 1 if T is None else T
    core_nbs = core_neighborhoods(core_field)
    X, U = model.n_states, model.n_actions
    actions = np.empty((k_max, T, X), dtype=np.int64)
    values = np.empty((k_max, T + 1, X))
    qs = np.empty((k_max, T + 1, X, U))
    eye = np.eye(U)
    for k in range(1, k_max + 1):
        rewards, kernels = periphery_tables(model, core_nbs, k, T)
        q = backward_induction(rewards, kernels)
        greedy = q[:T].argmax(axis=-1)
        actions[k - 1] = greedy
        values[k - 1] = forward_policy(model.mu0, kernels, eye[greedy])
        qs[k - 1] = q
    return PeripherySolution(actions, PeripheryField(values), qs)


def mix_overall(core_field: CoreField, periphery_field: PeripheryField, law: DegreeLaw,
                t: int | slice | None = None) -> np.ndarray:
    """``sum_k p_k mu^k + (1 - sum_k p_k) mu^core`` at time ``t`` (all times if ``None``)."""
    if law.k_max != periphery_field.k_max:
        raise ValueError(f"degree law covers {law.k_max} degrees, field has {periphery_field.k_max}")
    weights = law.mixture_weights()
    stacked = np.concatenate([periphery_field.values, core_field.average()[None]], axis=0)
    idx = slice(None) if t is None else t
    return np.tensordot(weights, stacked[:, idx], axes=1)


@dataclass
class Solution:
    """Output of both stages."""

    policy: PolicyBundle
    core_field: CoreField
    periphery_field: PeripheryField
    exploitability: np.ndarray
    alpha_star: float
    k_max: int

    @property
    def horizon(self) -> int:
        return self.policy.core.shape[1]


def solve(model: GameModel, graphex: Graphex, *, M: int = DEFAULT_M,
          alpha_star: float = DEFAULT_ALPHA_STAR, gamma: float = DEFAULT_GAMMA,
          tau_max: int = DEFAULT_TAU_MAX, k_max: int = 8, callback=None) -> Solution:
    """Run both stages of the hybrid algorithm."""
    core = solve_core(model, graphex, M, alpha_star, gamma, tau_max, callback=callback)
    periphery = solve_periphery(model, core.field, graphex, k_max)
    bundle = PolicyBundle(core.policy.core, core.policy.omd_accumulator, periphery.actions)
    return Solution(bundle, core.field, periphery.field, core.exploitability, alpha_star, k_max)

