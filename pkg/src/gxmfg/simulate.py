"""Agent-level play of learned policies on finite graphs and mean field errors."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .games import CORE, GameModel
from .graphex import DegreeLaw, Graphex, SampledGraph, degree_law, sample_graph
from .solver import Solution, mix_overall

logger = logging.getLogger(__name__)


@dataclass
class SimulationRun:
    graph: SampledGraph
    states: np.ndarray  # (T + 1, N) state indices
    seed: int
    k_max: int


@dataclass
class EmpiricalFields:
    """Empirical state histograms over time, shape ``(T + 1, X)`` each.

    ``by_degree`` only holds degrees ``k <= k_max`` that occur in the graph;
    ``core`` is ``None`` when no node has degree above ``k_max``.
    """

    by_degree: dict[int, np.ndarray]
    core: np.ndarray | None
    overall: np.ndarray
    counts: dict = field(default_factory=dict)


def assign_policies(graph: SampledGraph, bundle_or_solution, k_max: int,
                    alpha_star: float | None = None) -> np.ndarray:
    """Index every node into the stacked policy table of :func:`policy_table`.

    Nodes of degree ``k <= k_max`` get index ``k - 1`` (their periphery
    policy).  The others get ``k_max + c`` where ``c`` is the core class
    containing ``alpha(i) = i / sqrt(2 |E|)`` for 1-based node index ``i``,
    clamped to the last class.
    """
    bundle = getattr(bundle_or_solution, "policy", bundle_or_solution)
    if alpha_star is None:
        alpha_star = bundle_or_solution.alpha_star
    M = bundle.core.shape[0]
    deg = graph.degrees
    idx = np.empty(graph.num_nodes, dtype=np.int64)
    periphery = (deg >= 1) & (deg <= k_max)
    idx[periphery] = deg[periphery] - 1
    n_edges = max(graph.num_edges, 1)
    alpha = np.arange(1, graph.num_nodes + 1) / np.sqrt(2.0 * n_edges)
    cls = np.minimum(np.floor(alpha / (alpha_star / M)).astype(np.int64), M - 1)
    idx[~periphery] = k_max + cls[~periphery]
    return idx


def policy_table(bundle, n_actions: int, k_max: int) -> np.ndarray:
    """Stack ``k_max`` periphery one-hot policies on top of the ``M`` core ones."""
    if bundle.periphery is None:
        raise ValueError("policy bundle has no periphery policies; run solve_periphery first")
    if bundle.periphery.shape[0] < k_max:
        raise ValueError(f"bundle covers degrees up to {bundle.periphery.shape[0]}, need {k_max}")
    return np.concatenate([bundle.periphery_onehot(n_actions)[:k_max], bundle.core], axis=0)


def _categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One draw per row of ``probs`` by inverse CDF."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    return np.minimum((cdf <= u[:, None]).sum(axis=-1), probs.shape[-1] - 1)


def neighborhood_distributions(graph: SampledGraph, states: np.ndarray, n_states: int) -> np.ndarray:
    """Per-node empirical neighbour state distribution; zero rows for isolated nodes."""
    onehot = np.zeros((graph.num_nodes, n_states))
    onehot[np.arange(graph.num_nodes), states] = 1.0
    counts = graph.adjacency @ onehot
    deg = graph.degrees
    out = np.zeros_like(counts)
    nz = deg > 0
    out[nz] = counts[nz] / deg[nz, None]
    return out


def kernel_degrees(graph: SampledGraph, k_max: int) -> np.ndarray:
    """Degree class fed to the kernel: the degree itself up to ``k_max``, else CORE."""
    deg = graph.degrees.astype(float)
    return np.where(deg <= k_max, deg, CORE)


def step(run: SimulationRun, model: GameModel, table: np.ndarray, node_policy: np.ndarray,
         t: int, rng: np.random.Generator, degree_class: np.ndarray | None = None) -> None:
    """Advance every node from ``t`` to ``t + 1`` using only ``states[t]``."""
    x = run.states[t]
    n = len(x)
    if degree_class is None:
        degree_class = kernel_degrees(run.graph, run.k_max)
    G = neighborhood_distributions(run.graph, x, model.n_states)
    u = _categorical(rng, table[node_policy, t, x])
    P = model.transition_tensor(G, degree_class)  # (N, X, U, X)
    run.states[t + 1] = _categorical(rng, P[np.arange(n), x, u])


def simulate(model: GameModel, graph: SampledGraph, solution: Solution, seed: int,
             k_max: int | None = None) -> SimulationRun:
    """Play the solution's policies for the full horizon; reproducible per seed."""
    k_max = solution.k_max if k_max is None else k_max
    T = solution.horizon
    table = policy_table(solution.policy, model.n_actions, k_max)
    node_policy = assign_policies(graph, solution.policy, k_max, solution.alpha_star)
    rng = np.random.default_rng(seed)
    states = np.empty((T + 1, graph.num_nodes), dtype=np.int64)
    states[0] = rng.choice(model.n_states, size=graph.num_nodes, p=model.mu0)
    run = SimulationRun(graph, states, seed, k_max)
    degree_class = kernel_degrees(graph, k_max)
    for t in range(T):
        step(run, model, table, node_policy, t, rng, degree_class)
    return run


def _histogram(states: np.ndarray, n_states: int) -> np.ndarray:
    """Row-normalised state counts for ``states`` of shape ``(T + 1, n)``."""
    T1, n = states.shape
    counts = np.zeros((T1, n_states))
    np.add.at(counts, (np.repeat(np.arange(T1), n), states.ravel()), 1.0)
    return counts / n


def empirical_fields(run: SimulationRun, n_states: int, k_max: int | None = None) -> EmpiricalFields:
    k_max = run.k_max if k_max is None else k_max
    deg = run.graph.degrees
    by_degree, counts = {}, {}
    for k in range(1, k_max + 1):
        mask = deg == k
        if mask.any():
            by_degree[k] = _histogram(run.states[:, mask], n_states)
            counts[k] = int(mask.sum())
    core_mask = deg > k_max
    core = _histogram(run.states[:, core_mask], n_states) if core_mask.any() else None
    counts["core"] = int(core_mask.sum())
    # degree-0 nodes only occur in hand-built graphs; they count towards overall alone
    counts["other"] = int(run.graph.num_nodes - sum(counts.values()))
    overall = _histogram(run.states, n_states) if run.graph.num_nodes else np.zeros((run.states.shape[0], n_states))
    return EmpiricalFields(by_degree, core, overall, counts)


def delta_mu(empirical, predicted, T: int | None = None) -> float:
    """Time-averaged total variation ``(1 / 2T) sum_t ||a_t - b_t||_1`` over the first ``T`` rows."""
    a = np.asarray(empirical, dtype=float)
    b = np.asarray(predicted, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    T = a.shape[0] if T is None else T
    if not 1 <= T <= a.shape[0]:
        raise ValueError(f"T={T} outside 1..{a.shape[0]}")
    return float(np.abs(a[:T] - b[:T]).sum() / (2 * T))


def trial_errors(model: GameModel, solution: Solution, graph: SampledGraph, seed: int,
                 law: DegreeLaw) -> dict:
    """Simulate once and score every available field against the prediction."""
    T = solution.horizon
    run = simulate(model, graph, solution, seed)
    emp = empirical_fields(run, model.n_states)
    out = {"overall": delta_mu(emp.overall, mix_overall(solution.core_field, solution.periphery_field, law), T),
           "num_nodes": graph.num_nodes, "num_edges": graph.num_edges}
    if emp.core is not None:
        out["core"] = delta_mu(emp.core, solution.core_field.average(), T)
    for k, rows in emp.by_degree.items():
        out[k] = delta_mu(rows, solution.periphery_field.degree(k), T)
    return out


def _trial(args):
    model, solution, source, nu, seed, law = args
    graph_seed, dyn_seed = np.random.SeedSequence(seed).generate_state(2)
    if isinstance(source, Graphex):
        graph = sample_graph(source, nu, int(graph_seed))
    else:
        graph = source
    return trial_errors(model, solution, graph, int(dyn_seed), law)


def _summary(values):
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return None
    return {"mean": float(values.mean()), "std": float(values.std()), "n": int(len(values))}


def evaluate(model: GameModel, solution: Solution, source, nu: float = 0.0, trials: int = 10,
             seed: int = 0, law: DegreeLaw | None = None, jobs: int = 1) -> dict:
    """Mean and standard deviation of every mean field error over ``trials`` runs.

    ``source`` is a :class:`Graphex` (a fresh graph per trial at stopping time
    ``nu``) or a fixed :class:`SampledGraph` (fresh initial states and
    dynamics per trial).  ``law`` defaults to the graphex's own degree law.
    Trials where a degree class has no nodes are left out of that class's
    statistics.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if isinstance(source, Graphex) and not nu > 0:
        raise ValueError("sampling evaluation needs nu > 0")
    if law is None:
        if not isinstance(source, Graphex):
            raise ValueError("a degree law is required for fixed graphs")
        law = degree_law(source.sigma, solution.k_max)
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    tasks = [(model, solution, source, nu, int(s), law) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial, tasks))
    else:
        results = [_trial(task) for task in tasks]
    report = {"nu": nu, "trials": trials,
              "overall": _summary([r["overall"] for r in results]),
              "core": _summary([r["core"] for r in results if "core" in r]),
              "by_degree": {},
              "num_nodes": _summary([r["num_nodes"] for r in results]),
              "num_edges": _summary([r["num_edges"] for r in results])}
    for k in range(1, solution.k_max + 1):
        s = _summary([r[k] for r in results if k in r])
        if s is not None:
            report["by_degree"][k] = s
    return report
