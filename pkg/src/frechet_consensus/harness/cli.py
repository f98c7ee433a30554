"""Command line entry point.

Exit codes: 0 success, 1 no consensus within ``max_steps``, 2 invalid
configuration or usage, 3 a numerical routine failed or output could not
be written.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..clustering import elbow_report, kmeans, two_stage_consensus
from ..consensus_points import (
    LogisticAcceptance,
    geometric_consensus,
    probabilistic_consensus,
)
from ..engine import run_consensus
from ..errors import ConfigError, ConsensusError
from ..metric_core import frechet_barycenter, frechet_variance, uniform_weights
from ..sdr import SDRScenario, run_gev_consensus, run_sdr_consensus, value_contingency
from ..spaces import Wasserstein1D
from . import config as cfgmod
from .io import emit_positions, emit_trace, trace_summary, write_json

EXIT_OK, EXIT_NO_CONSENSUS, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
PRESETS = {"uniform_beliefs": SDRScenario.uniform_beliefs,
           "impatient_agents": SDRScenario.impatient_agents}

log = logging.getLogger("frechet_consensus")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frechet-consensus",
                                description="Consensus formation in metric opinion spaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, config_required=True):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=config_required, help="scenario JSON file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--scheme", choices=("one", "two"), help="one- or two-stage consensus")
        sp.add_argument("--k", type=int, help="number of clusters")
        return sp

    add("simulate", "run the evolutionary consensus scheme")
    add("cluster", "metric k-means on the anchors")
    b = add("barycenter", "one-shot barycenter or consensus point of the anchors")
    b.add_argument("--method", choices=("frechet", "geometric", "probabilistic"),
                   default="frechet")
    for name, what in (("sdr", "consensus on SDR curves"), ("gev", "consensus on GEV laws")):
        sp = add(name, what, config_required=False)
        sp.add_argument("--preset", choices=sorted(PRESETS), default="uniform_beliefs",
                        help="built-in scenario used when no config is given")
    add("validate", "check a scenario file")
    return p


def _load(args) -> cfgmod.ScenarioConfig:
    cfg = cfgmod.parse_config(args.config)
    data = cfg.model_dump()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output"]["dir"] = args.out
    if args.scheme is not None:
        data["scheme"]["kind"] = args.scheme
    if args.k is not None:
        data["scheme"]["k"] = args.k
    return cfgmod.parse_config_data(data)


def _cluster_k(cfg, args) -> int:
    return args.k or cfg.scheme.k or len(cfg.groups)


def _outdir(cfg) -> Path:
    return Path(cfg.output.dir)


def cmd_validate(args) -> int:
    cfg = cfgmod.parse_config(args.config)
    print(f"{args.config}: valid ({cfg.n_agents} agents, space {cfg.space.kind})")
    return EXIT_OK


def _write_run(space, trace, out: Path, cfg, extra: dict, agent_ids=None, name="trace") -> None:
    emit_trace(trace, out / (cfg.output.trace if name == "trace" else f"{name}.csv"), agent_ids)
    if cfg.output.positions and name == "trace":
        emit_positions(trace, space, out / cfg.output.positions)
    summary = trace_summary(space, trace)
    summary.update(extra)
    write_json(summary, out / (cfg.output.summary if name == "trace" else f"{name}.json"))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    space, anchors, profiles, _ = cfgmod.sample_population(cfg)
    engine, graph = cfgmod.engine_config(cfg), cfgmod.graph_spec(cfg)
    out = _outdir(cfg)
    if cfg.scheme.kind == "one":
        trace = run_consensus(space, anchors, profiles, graph=graph, config=engine)
        _write_run(space, trace, out, cfg, {"scheme": "one", "seed": cfg.seed})
        ok = trace.converged
    else:
        res = two_stage_consensus(space, anchors, profiles, _cluster_k(cfg, args),
                                  config=engine, graph=graph)
        for j, t in enumerate(res.local_traces):
            _write_run(space, t, out, cfg, {"cluster": j}, agent_ids=res.clustering.members(j),
                       name=f"local_{j}")
        _write_run(space, res.global_trace, out, cfg, {
            "scheme": "two", "seed": cfg.seed, "k": res.clustering.k,
            "labels": res.clustering.labels.tolist(), "local_steps": res.local_steps,
            "global_steps": res.global_steps, "total_steps_avg": res.total_steps_avg,
            "total_steps_worst": res.total_steps_worst, "partial": res.partial,
        })
        ok = not res.partial
        trace = res.global_trace
    print(f"{'consensus' if ok else 'no consensus'} after {trace.n_steps} steps; output in {out}")
    return EXIT_OK if ok else EXIT_NO_CONSENSUS


def cmd_cluster(args) -> int:
    cfg = _load(args)
    space, anchors, _, groups = cfgmod.sample_population(cfg)
    k = _cluster_k(cfg, args)
    res = kmeans(space, anchors, k, seed=cfg.seed)
    ks = range(1, min(len(anchors), max(2 * k, 8)) + 1)
    path = write_json({
        "k": k,
        "labels": res.labels.tolist(),
        "groups": groups.tolist(),
        "centers": [space.point_to_json(c) for c in res.centers],
        "within_variances": res.within_variances.tolist(),
        "objective_history": res.objective_history,
        "rounds": res.rounds,
        "elbow": elbow_report(space, anchors, ks, seed=cfg.seed),
    }, _outdir(cfg) / "clusters.json")
    print(f"k-means with K={k}: objective {res.objective:.6g} after {res.rounds} rounds; wrote {path}")
    return EXIT_OK


def cmd_barycenter(args) -> int:
    cfg = _load(args)
    space, anchors, profiles, _ = cfgmod.sample_population(cfg)
    n = len(anchors)
    if args.method == "frechet":
        w = uniform_weights(n)
        point = frechet_barycenter(space, anchors, w)
        extra = {"variance": frechet_variance(space, anchors, w)}
    elif args.method == "geometric":
        res = geometric_consensus(space, anchors)
        point, w = res.point, res.weights
        extra = {"objective": res.objective, "gap": res.gap}
    else:
        # acceptance slopes taken from each agent's sensitivity rho
        spec = LogisticAcceptance(np.array([p.rho for p in profiles]))
        res = probabilistic_consensus(space, anchors, spec)
        point, w = res.point, res.weights
        extra = {"acceptance": res.objective}
    path = write_json({"method": args.method, "point": space.point_to_json(point),
                       "weights": [float(x) for x in w], **extra},
                      _outdir(cfg) / "barycenter.json")
    print(f"{args.method} point written to {path}")
    return EXIT_OK


def _scenario(args):
    if args.config is None:
        sc = PRESETS[args.preset](seed=args.seed or 0)
        if args.scheme:
            sc.scheme = args.scheme
        return sc, Path(args.out or "out"), None
    cfg = _load(args)
    return cfgmod.sdr_scenario(cfg), _outdir(cfg), cfg


def _pipeline_summary(res, space) -> dict:
    extra = {"converged": res.converged, "n_steps": res.n_steps}
    if res.two_stage is not None:
        t = res.two_stage
        extra.update(local_steps=t.local_steps, global_steps=t.global_steps,
                     total_steps_avg=t.total_steps_avg, total_steps_worst=t.total_steps_worst)
    summary = trace_summary(space, res.trace)
    summary.update(extra)
    summary["consensus"] = None if res.consensus is None else space.point_to_json(res.consensus)
    return summary


def cmd_sdr(args) -> int:
    sc, out, cfg = _scenario(args)
    res = run_sdr_consensus(sc)
    space = sc.space()
    summary = _pipeline_summary(res, space)
    if cfg is not None and cfg.valuation is not None and all(g.gev for g in sc.subgroups):
        gev = run_gev_consensus(sc)
        rep = value_contingency(res.consensus, gev.consensus, cfg.valuation.t,
                                cfg.valuation.n_samples, seed=sc.seed)
        summary["valuation"] = rep.to_dict()
        summary["valuation"]["t"] = cfg.valuation.t
    emit_trace(res.trace, out / "trace.csv")
    path = write_json(summary, out / "summary.json")
    print(f"SDR consensus {'reached' if res.converged else 'not reached'} "
          f"after {res.n_steps} steps; wrote {path}")
    return EXIT_OK if res.converged else EXIT_NO_CONSENSUS


def cmd_gev(args) -> int:
    sc, out, _ = _scenario(args)
    res = run_gev_consensus(sc)
    summary = _pipeline_summary(res, Wasserstein1D())
    summary["gev_fit"] = None if res.fit is None else {
        "mu": res.fit.mu, "sigma": res.fit.sigma, "xi": res.fit.xi}
    emit_trace(res.trace, out / "trace.csv")
    path = write_json(summary, out / "summary.json")
    print(f"GEV consensus {'reached' if res.converged else 'not reached'} "
          f"after {res.n_steps} steps; wrote {path}")
    return EXIT_OK if res.converged else EXIT_NO_CONSENSUS


COMMANDS = {"simulate": cmd_simulate, "cluster": cmd_cluster, "barycenter": cmd_barycenter,
            "sdr": cmd_sdr, "gev": cmd_gev, "validate": cmd_validate}


def run_cli(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
