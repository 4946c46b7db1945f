"""Command-line front end.

Subcommands: ``bounds``, ``distances``, ``perturb``, ``experiment``,
``genmodel`` and ``rho``. Exit status is 0 on success, 2 when an input
violates a precondition and 1 on any other failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from . import faber_bounds, krylov, oracle
from .faber_bounds import PreconditionError
from .graph import (GraphError, MatrixKind, apply_delta, bfs_distances, build_matrix,
                    serialize_edge_list)
from .model import sample_graph

PRECONDITION_ERRORS = (PreconditionError, GraphError, ValueError)


def _source_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", metavar="FILE", help="edge list or MatrixMarket file")
    src.add_argument("--two-cycles", action="store_true", help="built-in two-cycles graph")
    src.add_argument("--model", metavar="SPEC",
                     help="logistic model sample: N[:ALPHA] or file:PATH[:ALPHA]")
    p.add_argument("--directed", action="store_true",
                   help="read the edge list as directed (default: header, else undirected)")
    p.add_argument("--base-index", type=int, default=0, choices=(0, 1))
    p.add_argument("--seed", type=int, default=0)


def _matrix_args(p):
    p.add_argument("--kind", default="plain", choices=[k.value for k in MatrixKind])
    p.add_argument("--f", dest="function", default="exp", help="exp or resolvent:ALPHA")
    p.add_argument("--steps", type=int, default=60, help="Krylov steps")


def _perturb_args(p, default="default"):
    p.add_argument("--perturb", default=default,
                   help="clique:M | reweight:M:ADD | delta:FILE | none | default")
    p.add_argument("--boundary", action="store_true",
                   help="reweight also the edges leaving the perturbed set")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netstab", description="Decay bounds for perturbed matrix-function centralities.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="per-pair bounds as CSV")
    _source_args(p)
    _matrix_args(p)
    _perturb_args(p)
    p.add_argument("--region", default="auto", choices=("auto", "segment", "disk"))
    p.add_argument("--pairs", default="diagonal",
                   help="diagonal, all, or a file of 'k l' lines")
    p.add_argument("--actual", action="store_true", help="add the dense actual variation")
    p.add_argument("--out", metavar="PREFIX")

    p = sub.add_parser("distances", help="Krylov-tracked distances against BFS")
    _source_args(p)
    p.add_argument("--node", type=int, required=True, help="start node (index)")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--out", metavar="PREFIX")

    p = sub.add_parser("perturb", help="write the perturbed graph")
    _source_args(p)
    _matrix_args(p)
    _perturb_args(p)
    p.add_argument("--out", metavar="PREFIX")

    p = sub.add_parser("experiment", help="run a perturbation experiment")
    _source_args(p)
    _matrix_args(p)
    _perturb_args(p)
    p.add_argument("--region", default="auto", choices=("auto", "segment", "disk"))
    p.add_argument("--out", metavar="PREFIX")

    p = sub.add_parser("genmodel", help="sample a logistic attachment graph")
    p.add_argument("--model", metavar="SPEC", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PREFIX")

    p = sub.add_parser("rho", help="distance accuracy of the tracker")
    _source_args(p)
    p.add_argument("--steps", default="1,2,3,4,5,6,7,8,9,10",
                   help="comma-separated step counts")
    p.add_argument("--out", metavar="PREFIX")
    return parser


def _config(args, perturb=None) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(
        graph_path=args.graph, two_cycles=args.two_cycles, model=args.model,
        directed=args.directed, base_index=args.base_index,
        kind=getattr(args, "kind", "plain"),
        function=getattr(args, "function", "exp"),
        perturb=perturb or getattr(args, "perturb", "none"),
        include_boundary=getattr(args, "boundary", False),
        steps=args.steps if isinstance(getattr(args, "steps", None), int) else 60,
        region=getattr(args, "region", "auto"),
        seed=args.seed)


@contextlib.contextmanager
def _output(prefix, suffix):
    """Open ``<prefix><suffix>`` or stdout; remove the file on failure."""
    if not prefix:
        yield sys.stdout
        return
    path = Path(f"{prefix}{suffix}")
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", newline="") as fh:
            yield fh
    except BaseException:
        path.unlink(missing_ok=True)
        raise


def _pairs(spec, n, base):
    if spec == "diagonal":
        return [(k, k) for k in range(n)]
    if spec == "all":
        return [(k, l) for k in range(n) for l in range(n)]
    pairs = []
    for line in Path(spec).read_text().splitlines():
        line = line.split("#", 1)[0].split()
        if line:
            pairs.append((int(line[0]) - base, int(line[1]) - base))
    return pairs


def cmd_bounds(args) -> int:
    cfg = _config(args)
    g = ex.load_graph(cfg)
    delta, _ = ex.make_delta(g, cfg)
    gt = apply_delta(g, delta)
    region = ex.choose_region(g, gt, cfg.kind, cfg.region)
    pairs = _pairs(args.pairs, g.n_nodes, args.base_index)
    reports = faber_bounds.stability_report(g, delta, cfg.kind, cfg.function, pairs, region)
    if args.actual:
        vals = oracle.exact_variation(g, delta, cfg.kind, cfg.function, pairs)
        for rep, v in zip(reports, vals):
            rep.actual = float(v)
    with _output(args.out, ".csv") as fh:
        faber_bounds.write_reports_csv(reports, fh)
    failed = [r for r in reports if r.error]
    for r in failed[:5]:
        logging.warning("pair (%d, %d): %s", r.k, r.l, r.error)
    return 0


def cmd_distances(args) -> int:
    cfg = _config(args, perturb="none")
    g = ex.load_graph(cfg)
    if not 0 <= args.node < g.n_nodes:
        raise ValueError(f"node {args.node} out of range")
    tracked = krylov.tracker_distances(g.adjacency, args.node, args.steps, g.directed)
    true = bfs_distances(g, args.node)
    with _output(args.out, ".csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("node", "tracked", "bfs"))
        for m in range(g.n_nodes):
            w.writerow((m, faber_bounds.format_number(tracked[m]),
                        faber_bounds.format_number(true[m])))
    return 0


def cmd_perturb(args) -> int:
    cfg = _config(args)
    g = ex.load_graph(cfg)
    delta, _ = ex.make_delta(g, cfg)
    gt = apply_delta(g, delta)
    # structural checks for the requested kind
    build_matrix(gt, cfg.kind)
    with _output(args.out, ".edges") as fh:
        fh.write(serialize_edge_list(gt, args.base_index))
    logging.info("applied %d changes; sources %s", len(delta), sorted(delta.sources))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    cfg.out = args.out
    result = ex.run_experiment(cfg)
    if not args.out:
        ex.write_rows_csv(result.rows, sys.stdout)
    summary = {k: v for k, v in result.summary.items() if k != "isim"}
    print(json.dumps(summary, default=ex.json_default), file=sys.stderr)
    return 0


def cmd_genmodel(args) -> int:
    model = ex.parse_model_spec(args.model, args.seed)
    g = sample_graph(model)
    with _output(args.out, ".edges") as fh:
        fh.write(serialize_edge_list(g))
    return 0


def cmd_rho(args) -> int:
    cfg = _config(args, perturb="none")
    g = ex.load_graph(cfg)
    ns = [int(s) for s in args.steps.split(",") if s.strip()]
    counts = ex.rho_count_curve(g, ns)
    with _output(args.out, ".csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("n", "rho", "wrong", "total"))
        for n, (wrong, total) in counts.items():
            rho = wrong / total if total else 0.0
            w.writerow((n, faber_bounds.format_number(rho), wrong, total))
    return 0


COMMANDS = {
    "bounds": cmd_bounds,
    "distances": cmd_distances,
    "perturb": cmd_perturb,
    "experiment": cmd_experiment,
    "genmodel": cmd_genmodel,
    "rho": cmd_rho,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ex.ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, PRECONDITION_ERRORS) else 1
    except PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
