"""Command line interface: ``lolog {fit,simulate,gof} ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .estimate import fit as run_fit
from .gof import gof_run, write_reports
from .io import write_attributes, write_edge_list
from .numerics import SingularMatrixError
from .sampler import replicate_rng, sample_graph

SCHEMA_VERSION = 1

log = logging.getLogger("lolog")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p, graph_required: bool):
    p.add_argument("--model", required=True, help="TOML model file")
    p.add_argument("--graph", required=graph_required, help="edge list (TSV, two vertex labels per line)")
    p.add_argument("--attrs", help="vertex attribute table (CSV, first column = vertex label)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="sampler threads (default: LOLOG_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lolog", description="Latent order logistic network models")
    sub = parser.add_subparsers(dest="command", metavar="{fit,simulate,gof}", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit", help="estimate parameters")
    _common(p, True)
    p.add_argument("--method", choices=("variational", "mom", "gmm"), default="mom")
    p.add_argument("--out", default="fit.json")
    p.add_argument("--strict", action="store_true", help="exit 2 if the fit does not converge")

    p = sub.add_parser("simulate", help="draw networks from a model")
    _common(p, False)
    p.add_argument("--n-sims", type=int, default=1)
    p.add_argument("--fit", help="fit.json whose estimates replace the configured theta")
    p.add_argument("--out", default="sims")

    p = sub.add_parser("gof", help="simulation goodness of fit")
    _common(p, True)
    p.add_argument("--fit", help="fit.json with the estimates (default: theta from the model file)")
    p.add_argument("--n-sims", type=int, default=100)
    p.add_argument("--stats", default="degree,esp", help="comma separated statistics")
    p.add_argument("--checkpoints", default=None, help="comma separated vertex counts (vertex-entry orders)")
    p.add_argument("--out", default="gof")

    # debugging aid, deliberately left out of --help
    p = sub.add_parser("oracle")
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    _common(p, False)
    p.add_argument("--out", default=None)
    return parser


def _theta_from(args, cfg):
    if getattr(args, "fit", None):
        doc = json.loads(Path(args.fit).read_text())
        theta = np.asarray(doc["theta"], dtype=float)
        if theta.size != len(cfg.model.terms):
            raise UsageError(f"{args.fit} has {theta.size} estimates for {len(cfg.model.terms)} terms")
        return theta
    if not cfg.theta_given:
        raise UsageError("no parameters: set theta in the model file or pass --fit")
    return cfg.model.theta


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def fit_document(res, cfg, args) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "method": res.method,
        "terms": res.labels,
        "theta": _jsonable(np.asarray(res.theta, float)),
        "se": _jsonable(res.se),
        "z": _jsonable(res.z),
        "p_values": _jsonable(res.p_values),
        "covariance": _jsonable(res.covariance),
        "observed_statistics": None if res.observed is None else _jsonable(res.observed),
        "observed_labels": res.observed_labels,
        "residuals": None if res.residuals is None else _jsonable(res.residuals),
        "objective_trace": _jsonable([float(v) for v in res.objective_trace]),
        "converged": bool(res.converged),
        "iterations": int(res.iterations),
        "epsilon": res.epsilon,
        "separated": bool(res.separated),
        "seed": args.seed,
        "r": cfg.fit.r,
        "n": cfg.model.n,
        "edges": cfg.graph.edge_count,
        "config": cfg.text,
    }


def cmd_fit(args) -> int:
    cfg = parse_config(args.model, args.graph, args.attrs, args.seed, require_graph=True)
    if args.threads:
        cfg.fit.threads = args.threads
    if args.method == "gmm" and cfg.moments is None:
        raise UsageError("--method gmm needs [[moments]] in the model file")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_fit(cfg.graph, cfg.model, args.method, cfg.moments, cfg.fit)
    for w in caught:
        log.warning("%s", w.message)
    doc = fit_document(res, cfg, args)
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"{res.method} fit, n = {cfg.model.n}, edges = {cfg.graph.edge_count}, "
          f"converged = {res.converged} after {res.iterations} iterations")
    print(res.table())
    if args.strict and not res.converged:
        print("fit did not converge", file=sys.stderr)
        return 2
    return 0


def cmd_simulate(args) -> int:
    cfg = parse_config(args.model, args.graph, args.attrs, args.seed)
    theta = _theta_from(args, cfg)
    if args.n_sims < 1:
        raise UsageError("--n-sims must be at least 1")
    model = cfg.model.with_theta(theta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(args.n_sims - 1))
    rows = ["draw\tedges\t" + "\t".join(model.labels_of_terms) + "\tlog_cond_lik"]
    for i in range(args.n_sims):
        d = sample_graph(model, replicate_rng(args.seed, i), keep_order=False)
        g = d.graph
        write_edge_list(g, out / f"draw_{i:0{width}d}.tsv")
        extra = {}
        if d.entry_sequence is not None:
            extra["entry"] = d.entry_times
        write_attributes(g, out / f"draw_{i:0{width}d}_vertices.csv", extra)
        rows.append(f"{i}\t{g.edge_count}\t" + "\t".join(f"{v:.10g}" for v in d.g) + f"\t{d.log_cond_lik:.10g}")
    (out / "stats.tsv").write_text("\n".join(rows) + "\n")
    print(f"wrote {args.n_sims} draws to {out}")
    return 0


def cmd_gof(args) -> int:
    cfg = parse_config(args.model, args.graph, args.attrs, args.seed, require_graph=True)
    theta = _theta_from(args, cfg)
    stats = [s.strip() for s in args.stats.split(",") if s.strip()]
    checkpoints = [int(c) for c in args.checkpoints.split(",")] if args.checkpoints else None
    reports = gof_run(theta, cfg.model, cfg.graph, args.n_sims, args.seed, stats, checkpoints, args.threads)
    write_reports(reports, args.out)
    for rep in reports:
        if rep.observed is not None:
            inside = rep.inside_envelope()
            print(f"{rep.name:<20} {int(inside.sum())}/{inside.size} bins inside the 5-95% envelope")
        else:
            print(f"{rep.name:<20} simulated only")
    return 0


def cmd_oracle(args) -> int:
    from .oracle import exact_law

    cfg = parse_config(args.model, args.graph, args.attrs, args.seed)
    law = exact_law(cfg.model)
    graphs = []
    for key, p in enumerate(law.probs):
        g = law.graph(key)
        graphs.append({"edges": [[g.labels[i], g.labels[j]] for i, j in g.edges().tolist()], "p": float(p)})
    doc = {"terms": cfg.model.labels_of_terms, "theta": cfg.model.theta.tolist(), "total": law.total,
           "E_g": law.E_g.tolist(), "E_G": law.E_G.tolist(), "jacobian": law.jacobian().tolist(), "graphs": graphs}
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "gof": cmd_gof, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    # LinAlgError is a ValueError, so it has to be caught first
    except (SingularMatrixError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lolog {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, UsageError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lolog {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
