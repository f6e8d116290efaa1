"""Command-line front end.

Subcommands::

    mvbound train           bag trees on a LIBSVM file, write prediction tables
    mvbound bounds          uniform and optimised FO/TND/CmuTND/COTND as JSON
    mvbound oracle-surface  C-bound / tandem-bound ratio over the feasible (g, t) grid
    mvbound bennett-surface Bennett / Bernstein ratio over (empirical loss, variance)

Exit codes: 0 on success, 2 for usage and input errors, 3 for numerical failures.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import bounds as B
from .dataio import ParseError, load_synthetic, read_libsvm, read_prediction_table, stratified_split, write_prediction_table
from .ensemble import TreeConfig, best_single_hypothesis, mv_test_loss, train_bagged
from .grids import mu_grid
from .lossstats import loss_stats
from .optimize import (
    NumericalError,
    OptimizerConfig,
    cmu_tnd_report,
    co_tnd_report,
    optimize_cmu_tnd,
    optimize_co_tnd,
    optimize_fo,
    optimize_tnd,
)
from .oracle import ratio_surface, write_surface_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

BUNDLED = "synthetic"

log = logging.getLogger("mvbound")


class UsageError(Exception):
    pass


def _delta(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("delta must lie in (0, 1)")
    return value


def _above_one(text):
    value = float(text)
    if value <= 1.0:
        raise argparse.ArgumentTypeError("grid ratio must exceed 1")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_train(args):
    data = load_synthetic() if args.data == BUNDLED else read_libsvm(args.data)
    train, test = stratified_split(data, args.test_fraction, args.seed)
    learner = TreeConfig(max_depth=args.depth)
    ens = train_bagged(train, args.hypotheses, learner=learner, seed=args.seed, bootstrap_fraction=args.bootstrap_fraction)
    os.makedirs(args.out, exist_ok=True)
    write_prediction_table(ens.table, os.path.join(args.out, "oob_table.csv"))
    test_table = ens.prediction_table(test)
    write_prediction_table(test_table, os.path.join(args.out, "test_table.csv"))
    sizes = ens.table.oob_mask.sum(axis=1)
    stats = loss_stats(ens.table)
    summary = {
        "data": args.data,
        "seed": args.seed,
        "n_hypotheses": args.hypotheses,
        "max_depth": args.depth,
        "n_train": len(train),
        "n_test": len(test),
        "n_classes": data.class_count,
        "oob_size_min": int(sizes.min()),
        "oob_size_mean": float(sizes.mean()),
        "m_min": stats.m_min,
        "oob_gibbs_loss_mean": float(stats.gibbs.mean()),
        "uniform_test_loss": mv_test_loss(np.full(args.hypotheses, 1.0 / args.hypotheses), test_table),
    }
    _dump_json(summary, os.path.join(args.out, "train_summary.json"))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def bounds_report(table, delta=0.05, mu_grid_size=200, c1=1.05, c2=1.05, test_table=None, config=None):
    """Uniform and optimised bounds for every objective, as a JSON-ready dict."""
    stats = loss_stats(table)
    H = stats.n_hypotheses
    mus = mu_grid(mu_grid_size)
    uniform = B.Posterior.uniform(H)
    config = config or OptimizerConfig()
    uniform_reports = {
        "FO": B.fo_bound(stats, uniform, delta),
        "TND": B.tnd_bound(stats, uniform, delta),
        "CmuTND": cmu_tnd_report(stats, uniform, delta, mus),
        "COTND": co_tnd_report(stats, uniform, delta, mus, c1, c2),
    }
    optimised = {
        "FO": optimize_fo(stats, delta, config),
        "TND": optimize_tnd(stats, delta, config),
        "CmuTND": optimize_cmu_tnd(stats, delta, mus, config),
        "COTND": optimize_co_tnd(stats, delta, mus, config, c1=c1, c2=c2),
    }
    out = {
        "config": {"delta": delta, "mu_grid_size": mu_grid_size, "c1": c1, "c2": c2},
        "stats": {"n_hypotheses": H, "n_min": stats.n_min, "m_min": stats.m_min},
        "bounds": {},
        "weights": {},
    }
    for name in uniform_reports:
        post, report, _ = optimised[name]
        out["bounds"][name] = {"uniform": uniform_reports[name].to_dict(), "optimized": report.to_dict()}
        out["weights"][name] = [float(w) for w in post.rho]
    tnd_opt = optimised["TND"][1].bound
    out["ratios"] = {
        "bound_vs_optimized_tnd": {
            name: (optimised[name][1].bound / tnd_opt if tnd_opt > 0 else None) for name in optimised
        }
    }
    if test_table is not None:
        if test_table.n_hypotheses != H:
            raise UsageError("test table and validation table have different numbers of hypotheses")
        uniform_loss = mv_test_loss(uniform.rho, test_table)
        losses = {name: mv_test_loss(optimised[name][0].rho, test_table) for name in optimised}
        best_h, best_loss = best_single_hypothesis(table, test_table)
        out["test_loss"] = {"uniform": uniform_loss, "best_single": best_loss, "best_single_index": best_h, **losses}
        out["ratios"]["test_loss_vs_uniform"] = {
            name: (loss / uniform_loss if uniform_loss > 0 else None) for name, loss in losses.items()
        }
    return out


def cmd_bounds(args):
    table = read_prediction_table(args.table)
    test_table = read_prediction_table(args.test_table) if args.test_table else None
    report = bounds_report(table, args.delta, args.mu_grid_size, args.c1, args.c2, test_table)
    report["config"]["seed"] = args.seed
    _dump_json(report, args.out)
    return EXIT_OK


def cmd_oracle_surface(args):
    g, t, ratio = ratio_surface(args.size)
    write_surface_csv(args.out, (g, t, ratio), ("g", "t", "ratio"))
    return EXIT_OK


def cmd_bennett_surface(args):
    cols = [[] for _ in range(6)]
    for n in args.n:
        E, V, ben, ber, ratio = B.bennett_bernstein_surface(n, kl=args.kl, delta=args.delta, b=args.b)
        for col, values in zip(cols, (np.full(E.size, n), E, V, ben, ber, ratio)):
            col.extend(values)
    write_surface_csv(args.out, cols, ("n", "emp", "var", "bennett", "bernstein", "ratio"))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="mvbound", description="PAC-Bayesian majority-vote bounds")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a bagged tree ensemble and write its prediction tables")
    p.add_argument("--data", default=BUNDLED, help=f"LIBSVM file, or '{BUNDLED}' for the bundled dataset")
    p.add_argument("--hypotheses", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=_positive_int, default=3)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--bootstrap-fraction", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bounds", help="compute uniform and optimised bounds for a prediction table")
    p.add_argument("--table", required=True, help="validation (out-of-bag) prediction table")
    p.add_argument("--test-table", help="fully evaluated test prediction table")
    p.add_argument("--delta", type=_delta, default=0.05)
    p.add_argument("--seed", type=int, default=0, help="recorded in the report; the computation is deterministic")
    p.add_argument("--mu-grid-size", type=int, default=200)
    p.add_argument("--c1", type=_above_one, default=1.05)
    p.add_argument("--c2", type=_above_one, default=1.05)
    p.add_argument("--out", default="-", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle-surface", help="write the oracle ratio surface as CSV")
    p.add_argument("--size", type=_positive_int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle_surface)

    p = sub.add_parser("bennett-surface", help="write the Bennett/Bernstein ratio surface as CSV")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[1000, 10000])
    p.add_argument("--kl", type=float, default=5.0)
    p.add_argument("--delta", type=_delta, default=0.05)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bennett_surface)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "mu_grid_size", 2) < 2:
        parser.error("--mu-grid-size must be at least 2")
    try:
        return args.func(args)
    except (NumericalError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"mvbound: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ParseError, UsageError, ValueError) as exc:
        print(f"mvbound: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
