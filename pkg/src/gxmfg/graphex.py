"""Separable power-law graphexes: kernel, marginals, sampling and degree law.

The graphex used throughout is

    W(a, b) = (1 + a)^(-1/sigma) * (1 + b)^(-1/sigma),    0 < sigma < 1,

whose sampled graphs have power-law degree tails.  Finite graphs are drawn by
truncating a unit-rate Poisson process on R_+^2 at time ``nu`` and dropping
isolated candidates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

#: Expected degree below which a candidate is treated as never connecting.
TRUNCATION_DEGREE = 1e-3

#: Default cap on the expected number of Poisson candidates per sample.
DEFAULT_CANDIDATE_CAP = 20_000_000


class GraphexError(ValueError):
    """Raised on invalid graphex parameters or unsupported graph operations."""


class SamplingBudgetError(RuntimeError):
    """Raised when a sample would exceed the configured candidate cap."""


def _check_sigma(sigma: float) -> None:
    if not 0.0 < sigma < 1.0:
        raise GraphexError(f"sigma must lie in (0, 1), got {sigma!r}")


@dataclass(frozen=True)
class Graphex:
    """Separable power-law graphex with exponent parameter ``sigma``.

    ``alpha_max`` only bounds the latent space when sampling; ``None`` lets
    :func:`sample_graph` choose it from ``nu``.
    """

    sigma: float = 0.5
    alpha_max: float | None = None

    def __post_init__(self):
        _check_sigma(self.sigma)
        if self.alpha_max is not None and not self.alpha_max > 0:
            raise GraphexError(f"alpha_max must be positive, got {self.alpha_max!r}")

    def marginal_factor(self, alpha):
        """The one-dimensional factor ``(1 + alpha)^(-1/sigma)`` of the kernel."""
        alpha = np.asarray(alpha, dtype=float)
        if np.any(alpha < 0) or not np.all(np.isfinite(alpha)):
            raise GraphexError("latent parameters must be finite and nonnegative")
        return (1.0 + alpha) ** (-1.0 / self.sigma)


def kernel_value(g: Graphex, alpha, beta):
    """Evaluate ``W(alpha, beta)``; broadcasts over array arguments."""
    out = g.marginal_factor(alpha) * g.marginal_factor(beta)
    return float(out) if np.ndim(out) == 0 else out


def xi(g: Graphex, alpha):
    """Marginal ``xi_W(alpha) = int_0^inf W(alpha, b) db`` in closed form."""
    out = g.marginal_factor(alpha) * g.sigma / (1.0 - g.sigma)
    return float(out) if np.ndim(out) == 0 else out


def xi_bar(g: Graphex) -> float:
    """Total kernel mass ``(sigma / (1 - sigma))^2``."""
    return (g.sigma / (1.0 - g.sigma)) ** 2


def truncation_alpha(g: Graphex, nu: float, threshold: float = TRUNCATION_DEGREE) -> float:
    """Smallest latent value whose expected degree ``nu * xi`` drops below ``threshold``."""
    s = g.sigma
    return max((nu * s / ((1.0 - s) * threshold)) ** s - 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """A finite simple undirected graph with every node of degree >= 1.

    Attributes
    ----------
    num_nodes : int
    edges : (E, 2) int array
        Canonical ``(i, j)`` pairs with ``i < j``, lexicographically sorted.
    latents : float array or None
        Latent parameters in ascending order for sampled graphs, ``None`` for
        ingested ones.
    nu : float
        Stopping time of the sampler; 0 for ingested graphs.
    """

    num_nodes: int
    edges: np.ndarray
    latents: np.ndarray | None = None
    nu: float = 0.0
    _csr: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", edges)
        n = self.num_nodes
        data = np.ones(2 * len(edges), dtype=np.int8)
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        object.__setattr__(self, "_csr", sp.csr_matrix((data, (rows, cols)), shape=(n, n)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix in CSR form."""
        return self._csr

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        a = self._csr
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def degree_histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.degrees, return_counts=True)
        return {int(k): int(c) for k, c in zip(values, counts)}

    def __eq__(self, other):
        if not isinstance(other, SampledGraph):
            return NotImplemented
        same_latents = (self.latents is None and other.latents is None) or (
            self.latents is not None and other.latents is not None
            and np.array_equal(self.latents, other.latents))
        return (self.num_nodes == other.num_nodes and self.nu == other.nu
                and np.array_equal(self.edges, other.edges) and same_latents)

    __hash__ = None


def graph_from_edges(num_nodes: int, edges, latents=None, nu: float = 0.0) -> SampledGraph:
    """Build a cleaned graph: drop loops and duplicates, then isolated nodes.

    Surviving nodes keep their relative order.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    edges = edges[edges[:, 0] != edges[:, 1]]
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    keep = np.zeros(num_nodes, dtype=bool)
    keep[edges.ravel()] = True
    relabel = np.cumsum(keep) - 1
    edges = relabel[edges]
    if latents is not None:
        latents = np.asarray(latents, dtype=float)[keep]
    return SampledGraph(int(keep.sum()), edges, latents, nu)


def _pairs_dense(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """All-pairs Bernoulli trials; O(n^2).  Used for small graphs and as a reference."""
    n = len(weights)
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    iu, ju = np.triu_indices(n, k=1)
    p = np.minimum(weights[iu] * weights[ju], 1.0)
    hit = rng.random(len(p)) < p
    return np.column_stack([iu[hit], ju[hit]])


def _pairs_skip(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact rank-one edge sampling with geometric skips (Miller & Hagberg).

    ``weights`` must be non-increasing.  For each ``u`` the candidates ``v > u``
    are visited by skipping a geometric number of nodes under the current upper
    bound ``w_u w_v`` and thinning with the true probability; expected cost is
    O(n + E).
    """
    n = len(weights)
    w = weights.tolist()
    out_u: list[int] = []
    out_v: list[int] = []
    rand = rng.random
    log = math.log
    for u in range(n - 1):
        wu = w[u]
        v = u + 1
        p = min(wu * w[v], 1.0)
        while v < n and p > 0.0:
            if p < 1.0:
                r = rand()
                v += int(log(r) / math.log1p(-p)) if r > 0.0 else n
            if v < n:
                q = min(wu * w[v], 1.0)
                if rand() < q / p:
                    out_u.append(u)
                    out_v.append(v)
                p = q
                v += 1
    return np.column_stack([np.asarray(out_u, dtype=np.int64), np.asarray(out_v, dtype=np.int64)])


def sample_graph(g: Graphex, nu: float, seed: int, *,
                 candidate_cap: float = DEFAULT_CANDIDATE_CAP,
                 method: str = "auto") -> SampledGraph:
    """Sample ``G_nu`` from the graphex.

    Candidates are a Poisson(``nu * alpha_max``) number of latents drawn
    uniformly on ``[0, alpha_max]``, sorted ascending; each unordered pair is
    joined with probability ``W``; isolated candidates are discarded.

    ``method`` selects the pair loop: ``"dense"`` runs every Bernoulli trial,
    ``"skip"`` uses the exact geometric-skip sampler, ``"auto"`` picks dense
    below 2000 candidates.
    """
    if not nu > 0:
        raise GraphexError(f"nu must be positive, got {nu!r}")
    alpha_max = g.alpha_max if g.alpha_max is not None else truncation_alpha(g, nu)
    expected = nu * alpha_max
    if expected > candidate_cap:
        raise SamplingBudgetError(
            f"expected {expected:.3g} candidates exceeds cap {candidate_cap:.3g}")
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(expected))
    latents = np.sort(rng.uniform(0.0, alpha_max, size=n))
    weights = g.marginal_factor(latents)
    if method == "auto":
        method = "dense" if n < 2000 else "skip"
    if method == "dense":
        edges = _pairs_dense(weights, rng)
    elif method == "skip":
        edges = _pairs_skip(weights, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    logger.debug("nu=%g: %d candidates, %d edges", nu, n, len(edges))
    return graph_from_edges(n, edges, latents=latents, nu=nu)


@dataclass(frozen=True)
class DegreeLaw:
    """Limiting degree probabilities ``p_1..p_kmax`` for a given sigma."""

    sigma_hat: float
    probs: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.probs)

    @property
    def core_mass(self) -> float:
        return 1.0 - float(self.probs.sum())

    def mixture_weights(self) -> np.ndarray:
        """``(p_1, ..., p_kmax, 1 - sum p)``."""
        return np.append(self.probs, self.core_mass)


def degree_law(sigma_hat: float, k_max: int) -> DegreeLaw:
    """``p_k = s Gamma(k - s) / (k! Gamma(1 - s))`` via ``p_{k+1} = p_k (k - s)/(k + 1)``."""
    _check_sigma(sigma_hat)
    if k_max < 1:
        raise GraphexError(f"k_max must be >= 1, got {k_max!r}")
    probs = np.empty(k_max)
    probs[0] = sigma_hat
    for k in range(1, k_max):
        probs[k] = probs[k - 1] * (k - sigma_hat) / (k + 1)
    probs.setflags(write=False)
    return DegreeLaw(float(sigma_hat), probs)


def estimate_sigma(graph: SampledGraph, lo: float = 0.01, hi: float = 0.99) -> float:
    """Plug-in estimate: the fraction of degree-1 nodes, clamped to ``[lo, hi]``.

    In the limiting degree law ``p_1 = sigma`` exactly.
    """
    if graph.num_nodes == 0:
        raise GraphexError("cannot estimate sigma on an empty graph")
    frac = float(np.count_nonzero(graph.degrees == 1)) / graph.num_nodes
    return min(max(frac, lo), hi)
