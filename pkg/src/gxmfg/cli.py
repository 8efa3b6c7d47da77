"""Command-line entry point.

Subcommands: ``sample``, ``solve``, ``eval``, ``estimate-sigma``.  Settings
resolve as built-in defaults, then ``--preset``, then ``--config`` (flat JSON
object), then explicit flags.  Every command writes its effective
configuration to ``<output_dir>/config.json`` next to its artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import netio
from .games import DEFAULT_K_MAX, make_game
from .graphex import Graphex, degree_law, estimate_sigma, sample_graph
from .simulate import evaluate
from .solver import DEFAULT_ALPHA_STAR, DEFAULT_GAMMA, DEFAULT_M, DEFAULT_TAU_MAX, mix_overall, solve

logger = logging.getLogger("gxmfg")

PRESETS = {
    "full": {},
    # reduced horizon for quick runs
    "ci": {"T": 50, "tau_max": 500, "M": 10, "trials": 10},
}


@dataclass
class ExperimentConfig:
    game: str = "sis"
    game_params: dict = field(default_factory=dict)
    sigma: float = 0.5
    nu: list = field(default_factory=lambda: [10.0, 50.0, 200.0])
    M: int = DEFAULT_M
    alpha_star: float = DEFAULT_ALPHA_STAR
    k_max: int | None = None
    gamma: float = DEFAULT_GAMMA
    tau_max: int = DEFAULT_TAU_MAX
    T: int | None = None
    trials: int = 20
    seed: int = 0
    dataset_path: str | None = None
    output_dir: str = "out"
    jobs: int = 1
    preset: str = "full"

    def resolved(self) -> "ExperimentConfig":
        """Fill game-dependent defaults and validate ranges."""
        cfg = ExperimentConfig(**asdict(self))
        if cfg.game not in DEFAULT_K_MAX:
            raise ValueError(f"unknown game {cfg.game!r}; choose from {sorted(DEFAULT_K_MAX)}")
        if cfg.k_max is None:
            cfg.k_max = DEFAULT_K_MAX[cfg.game]
        if cfg.T is None:
            cfg.T = make_game(cfg.game, **cfg.game_params).horizon
        if isinstance(cfg.nu, (int, float)):
            cfg.nu = [float(cfg.nu)]
        checks = [(cfg.tau_max >= 1, "tau_max must be >= 1"), (cfg.M >= 1, "M must be >= 1"),
                  (cfg.k_max >= 1, "k_max must be >= 1"), (cfg.T >= 1, "T must be >= 1"),
                  (cfg.trials >= 1, "trials must be >= 1"), (cfg.gamma > 0, "gamma must be > 0"),
                  (cfg.alpha_star > 0, "alpha_star must be > 0"), (0 < cfg.sigma < 1, "sigma must be in (0, 1)"),
                  (all(v > 0 for v in cfg.nu), "nu values must be > 0"), (cfg.jobs >= 1, "jobs must be >= 1")]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)
        return cfg

    def model(self):
        params = dict(self.game_params)
        params["T"] = self.T
        return make_game(self.game, **params)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    preset = args.preset or "full"
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}")
    values.update(PRESETS[preset])
    values["preset"] = preset
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    known = {f.name for f in fields(ExperimentConfig)}
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    for item in args.param or []:
        key, _, raw = item.partition("=")
        values.setdefault("game_params", {})
        values["game_params"] = dict(values["game_params"], **{key: _parse_value(raw)})
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**values).resolved()


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _prepare_output(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    netio.write_report(asdict(cfg), out / "config.json")
    return out


def _solve(cfg: ExperimentConfig, sigma: float):
    model = cfg.model()
    graphex = Graphex(sigma)
    t0 = time.perf_counter()
    solution = solve(model, graphex, M=cfg.M, alpha_star=cfg.alpha_star, gamma=cfg.gamma,
                     tau_max=cfg.tau_max, k_max=cfg.k_max)
    logger.info("solved %s in %.1fs, exploitability %.4g -> %.4g", cfg.game,
                time.perf_counter() - t0, solution.exploitability[0], solution.exploitability[-1])
    return model, graphex, solution


def _persist_solution(out: Path, solution, law=None) -> None:
    netio.save_policy(solution.policy, out / "policy.npz")
    series = netio.solution_fields(solution)
    if law is not None:
        series["overall"] = mix_overall(solution.core_field, solution.periphery_field, law)
    netio.write_fields(series, out / "fields.csv")
    netio.write_trace(solution.exploitability, out / "trace.csv")


def cmd_sample(cfg: ExperimentConfig) -> dict:
    out = _prepare_output(cfg)
    nu = cfg.nu[0]
    graph = sample_graph(Graphex(cfg.sigma), nu, cfg.seed)
    netio.write_edge_list(graph, out / "graph.txt")
    summary = {"sigma": cfg.sigma, "nu": nu, "seed": cfg.seed, "num_nodes": graph.num_nodes,
               "num_edges": graph.num_edges, "degree_histogram": graph.degree_histogram()}
    netio.write_report(summary, out / "sample.json")
    print(f"nu={nu:g} seed={cfg.seed}: N={graph.num_nodes} |E|={graph.num_edges}")
    return summary


def cmd_solve(cfg: ExperimentConfig) -> dict:
    out = _prepare_output(cfg)
    _, _, solution = _solve(cfg, cfg.sigma)
    law = degree_law(cfg.sigma, cfg.k_max)
    _persist_solution(out, solution, law)
    trace = solution.exploitability
    print(f"{cfg.game}: exploitability {trace[0]:.4g} -> {trace[-1]:.4g} over {len(trace)} iterations")
    return {"exploitability": trace}


def _load_dataset(cfg: ExperimentConfig):
    if not cfg.dataset_path:
        raise ValueError("dataset_path is required")
    path = Path(cfg.dataset_path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    return netio.load_edge_list(path)


def cmd_eval(cfg: ExperimentConfig) -> dict:
    out = _prepare_output(cfg)
    rows = []
    if cfg.dataset_path:
        graph = _load_dataset(cfg)
        sigma_hat = estimate_sigma(graph)
        model, _, solution = _solve(cfg, sigma_hat)
        law = degree_law(sigma_hat, cfg.k_max)
        row = evaluate(model, solution, graph, trials=cfg.trials, seed=cfg.seed, law=law, jobs=cfg.jobs)
        row["dataset"] = str(cfg.dataset_path)
        rows.append(row)
    else:
        sigma_hat = cfg.sigma
        model, graphex, solution = _solve(cfg, cfg.sigma)
        law = degree_law(cfg.sigma, cfg.k_max)
        for nu in cfg.nu:
            rows.append(evaluate(model, solution, graphex, nu=nu, trials=cfg.trials, seed=cfg.seed,
                                 law=law, jobs=cfg.jobs))
    _persist_solution(out, solution, law)
    report = {"model": cfg.game, "sigma_hat": sigma_hat, "trials": cfg.trials,
              "nu": [r["nu"] for r in rows], "delta_mu": rows,
              "exploitability": solution.exploitability}
    netio.write_report(report, out / "report.json")
    for r in rows:
        core = r["core"]["mean"] if r["core"] else float("nan")
        print(f"nu={r['nu']:g}: delta_mu={r['overall']['mean']:.4f}+-{r['overall']['std']:.4f} "
              f"core={core:.4f}")
    return report


def cmd_estimate_sigma(cfg: ExperimentConfig) -> dict:
    out = _prepare_output(cfg)
    if cfg.dataset_path:
        graph = _load_dataset(cfg)
        source = str(cfg.dataset_path)
    else:
        graph = sample_graph(Graphex(cfg.sigma), cfg.nu[0], cfg.seed)
        source = f"sampled sigma={cfg.sigma} nu={cfg.nu[0]} seed={cfg.seed}"
    sigma_hat = estimate_sigma(graph)
    result = {"source": source, "sigma_hat": sigma_hat, "num_nodes": graph.num_nodes,
              "num_edges": graph.num_edges}
    netio.write_report(result, out / "sigma.json")
    print(f"sigma_hat={sigma_hat:.4f}")
    return result


COMMANDS = {"sample": cmd_sample, "solve": cmd_solve, "eval": cmd_eval,
            "estimate-sigma": cmd_estimate_sigma}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of settings")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--game", choices=sorted(DEFAULT_K_MAX))
    common.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="game parameter override, repeatable (e.g. tau_I=0.3)")
    common.add_argument("--sigma", type=float)
    common.add_argument("--nu", type=float, nargs="+")
    common.add_argument("--M", type=int)
    common.add_argument("--alpha-star", dest="alpha_star", type=float)
    common.add_argument("--k-max", dest="k_max", type=int)
    common.add_argument("--gamma", type=float)
    common.add_argument("--tau-max", dest="tau_max", type=int)
    common.add_argument("--T", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--dataset", dest="dataset_path")
    common.add_argument("--output-dir", "-o", dest="output_dir")
    common.add_argument("--jobs", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gxmfg", description="Graphex mean field game experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="sample a graph from the power-law graphex")
    sub.add_parser("solve", parents=[common], help="learn core and periphery policies")
    sub.add_parser("eval", parents=[common], help="compare predicted and simulated mean fields")
    sub.add_parser("estimate-sigma", parents=[common], help="estimate sigma from a graph")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        COMMANDS[args.command](cfg)
    except (ValueError, OSError, RuntimeError, MemoryError) as exc:
        print(f"gxmfg {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
