"""Command-line surface.

Subcommands: ``simulate`` (scenario to panel and truth files), ``sample``
(panel + graph + config to a posterior sample and its manifest), ``estimate``
(sample to Bayes estimates and marginal tables), ``score`` (estimates + graph
to connectedness scores), ``graph`` (motif builders to an edge-list CSV).
Exit codes: 0 success, 1 validation error, 2 runtime failure. Errors go to
stderr with the prefix ``graphcp: error:``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio, graphs, simulation
from .core import (
    ConfigurationError,
    DeltaPrior,
    Hyperparameters,
    IngestionError,
    InvalidLagError,
    InvalidStateError,
    WindowPrior,
)
from .estimator import bayes_estimate, marginal_summaries
from .core import ChangepointState
from .likelihood import MultinomialDirichlet, PoissonGamma
from .sampler import SamplerConfig, run_chain

ERROR_PREFIX = "graphcp: error:"


def _window_prior_from_json(obj) -> WindowPrior | tuple[WindowPrior, ...]:
    def one(d: dict) -> WindowPrior:
        mode = d.get("mode", "zero")
        return WindowPrior(mode=mode, w=int(d.get("w", 0)), eta=float(d.get("eta", 0.9)))

    if isinstance(obj, list):
        return tuple(one(d) for d in obj)
    return one(obj)


def load_config(path: str | Path) -> dict:
    """Parse the JSON run configuration into hyperparameters, sampler config
    and an observation-model factory (a panel is needed to finalise the
    multinomial category count)."""
    with open(path) as fh:
        raw = json.load(fh)
    if "p_bar" not in raw:
        raise ConfigurationError(f"{path}: config requires p_bar")
    dp = raw.get("delta_prior", {})
    hyper = Hyperparameters(
        p_bar=float(raw["p_bar"]),
        delta_prior=DeltaPrior(
            spike=float(dp.get("spike", 0.5)),
            a=float(dp.get("a", 1.0)),
            b=float(dp.get("b", 30.0)),
        ),
        window_prior=_window_prior_from_json(raw.get("window_prior", {"mode": "zero"})),
        gamma_loss=float(raw.get("gamma_loss", 40.0)),
        varpi=float(raw.get("varpi", 24.0)),
    )
    sc = raw.get("sampler", {})
    config = SamplerConfig(
        iterations=int(sc.get("iterations", 50_000)),
        burn_in=int(sc.get("burn_in", 10_000)),
        thin=int(sc.get("thin", 1)),
        move_weights=sc.get("move_weights"),
        rho=float(sc.get("rho", 0.5)),
        seed=int(sc.get("seed", 0)),
        init=sc.get("init", "cold"),
        init_iterations=int(sc.get("init_iterations", 2_000)),
        init_burn_in=int(sc.get("init_burn_in", 500)),
    )
    obs = raw.get("observation", {"family": "poisson_gamma", "shape": 100.0, "rate": 0.1})

    def model_for(panel):
        family = obs.get("family", "poisson_gamma")
        if family == "poisson_gamma":
            return PoissonGamma(float(obs.get("shape", 100.0)), float(obs.get("rate", 0.1)))
        if family == "multinomial_dirichlet":
            if "alphas" in obs:
                return MultinomialDirichlet(obs["alphas"])
            return MultinomialDirichlet([float(obs.get("alpha", 1.0))] * panel.M)
        raise ConfigurationError(f"unknown observation family {family!r}")

    return {"hyper": hyper, "config": config, "model_for": model_for, "raw": raw}


def _cmd_simulate(args) -> int:
    scen = simulation.Scenario(
        name=args.scenario, theta=args.theta, v=args.v, c2_size=args.c2_size
    )
    rng = np.random.default_rng(args.seed)
    panel, truth = simulation.simulate_panel(scen, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_panel_csv(panel, out / "panel.csv")
    dataio.write_changepoints_csv(truth, out / "truth.csv")
    print(f"wrote {out / 'panel.csv'} and {out / 'truth.csv'}")
    return 0


def _cmd_sample(args) -> int:
    cfg = load_config(args.config)
    panel_format = "vectors" if args.vectors else "counts"
    panel = dataio.ingest_panel(args.panel, panel_format)
    graph = graphs.read_graph_csv(args.graph, L=panel.L)
    model = cfg["model_for"](panel)
    config = cfg["config"]
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    sample = run_chain(panel, model, graph, cfg["hyper"], config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_sample_csv(sample, out / "sample.csv")
    config_echo = dict(cfg["raw"])
    config_echo.setdefault("sampler", {})
    config_echo["sampler"] = dict(config_echo["sampler"], seed=config.seed)
    manifest = dataio.build_manifest(
        sample, config_echo, {"panel": str(args.panel), "graph": str(args.graph), "config": str(args.config)}
    )
    dataio.write_manifest(manifest, out / "manifest.json")
    print(f"wrote {out / 'sample.csv'} and {out / 'manifest.json'}")
    return 0


def _cmd_estimate(args) -> int:
    sample = dataio.load_sample_csv(args.sample, args.manifest)
    taus = []
    for i in range(sample.L):
        _, tau = bayes_estimate(sample, i, args.gamma)
        taus.append(tau)
    estimates = ChangepointState(tuple(taus))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_changepoints_csv(estimates, out / "estimates.csv")
    summaries = marginal_summaries(sample)
    dataio.write_marginals_csv(
        summaries, out / "k_marginals.csv", out / "position_marginals.csv"
    )
    print(f"wrote estimates and marginal tables under {out}")
    return 0


def _cmd_score(args) -> int:
    graph = graphs.read_graph_csv(args.graph, L=args.L)
    estimates = dataio.read_changepoints_csv(args.estimates, graph.L)
    scores = graphs.connectedness_scores(graph, estimates, args.varpi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_scores_csv(scores, estimates, out / "scores.csv", out / "changepoint_scores.csv")
    print(f"wrote scores under {out}")
    return 0


def _cmd_graph(args) -> int:
    if args.kind == "star":
        g = graphs.build_star(args.L)
    elif args.kind == "lattice":
        g = graphs.build_lattice(args.l1, args.l2)
    elif args.kind == "rchain":
        g = graphs.build_rchain(args.L, args.r)
    else:
        raise ConfigurationError(f"unknown graph kind {args.kind!r}")
    if args.lambda_s is not None:
        if args.p_bar is None:
            raise ConfigurationError("--lambda-s requires --p-bar for scaling")
        g = graphs.scale_weights(g, args.p_bar, args.lambda_s, args.degree_mode)
    graphs.write_graph_csv(g, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_ingest_events(args) -> int:
    panel, graph, info = dataio.ingest_auth_events(
        args.events, args.max_pair_events, args.max_users_per_source
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_panel_csv(panel, out / "panel.csv")
    graphs.write_graph_csv(graph, out / "graph.csv")
    with open(out / "ingest_info.json", "w") as fh:
        json.dump(
            {k: v for k, v in info.items() if k != "users"}
            | {"n_users": len(info["users"])},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    print(f"wrote panel.csv, graph.csv and ingest_info.json under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphcp")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic panel and its truth")
    p.add_argument("--scenario", required=True, choices=simulation.SCENARIOS)
    p.add_argument("--theta", type=float, default=1050.0)
    p.add_argument("--v", type=int, default=0, help="asynchrony offset (async scenario)")
    p.add_argument("--c2-size", type=int, default=9, help="affected peripherals (star)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sample", help="run the MCMC sampler")
    p.add_argument("--panel", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--vectors", action="store_true", help="panel holds count vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="Bayes estimates and marginals from a sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--gamma", type=float, default=40.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("score", help="network connectedness scores of estimates")
    p.add_argument("--estimates", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--varpi", type=float, default=24.0)
    p.add_argument("--L", type=int, default=None, help="node count override")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("graph", help="build a dependency-graph edge list")
    p.add_argument("--kind", required=True, choices=["star", "lattice", "rchain"])
    p.add_argument("--L", type=int, default=30)
    p.add_argument("--l1", type=int, default=6)
    p.add_argument("--l2", type=int, default=5)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--p-bar", type=float, default=None)
    p.add_argument("--lambda-s", type=float, default=None)
    p.add_argument("--degree-mode", choices=["max", "mean"], default="max")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("ingest-events", help="aggregate an authentication event log")
    p.add_argument("--events", required=True)
    p.add_argument("--max-pair-events", type=int, default=dataio.PAIR_EVENT_LIMIT)
    p.add_argument("--max-users-per-source", type=int, default=dataio.USERS_PER_SOURCE_LIMIT)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest_events)

    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IngestionError, ConfigurationError, InvalidStateError, InvalidLagError, ValueError) as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"{ERROR_PREFIX} {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli())
