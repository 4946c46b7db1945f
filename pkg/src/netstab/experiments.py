"""Synthetic graphs, perturbation recipes and the experiment runner.

The runner perturbs a graph, computes the actual diagonal variation
``|f(A)_kk - f(A~)_kk|`` next to its a priori bound for every node, and
writes the result as CSV with nodes relabeled by their distance from the
perturbed set.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import faber_bounds, krylov, oracle, spectral
from .functions import Exp, parse_function
from .graph import (EdgeChange, EdgeDelta, Graph, MatrixKind, apply_delta,
                    bfs_distances, build_matrix, clique_delta, from_edges,
                    parse_edge_list, read_matrix_market, reweight_delta)
from .model import LogisticModel, sample_graph

CYCLE_LENGTH = 111
SAMPLE_PAIRS = 200


def build_two_cycles(length: int = CYCLE_LENGTH) -> Graph:
    """Two undirected cycles joined by one directed bridge.

    Nodes are labelled ``1..2*length``; ``1..length`` form the first cycle,
    the rest the second, and the bridge goes from ``length`` to
    ``length + 1``. Internally node ``label`` has index ``label - 1``.
    """
    edges = []
    for base in (0, length):
        for i in range(length):
            a, b = base + i, base + (i + 1) % length
            edges.append((a, b))
            edges.append((b, a))
    edges.append((length - 1, length))
    labels = tuple(range(1, 2 * length + 1))
    return from_edges(2 * length, edges, directed=True, node_labels=labels)


def two_cycles_perturbation(length: int = CYCLE_LENGTH) -> EdgeDelta:
    """Adds the reverse bridge ``length + 1 -> length`` (labels)."""
    return EdgeDelta((EdgeChange(length, length - 1, "add", 1.0),))


def diagonal_values(g: Graph, f, kind=MatrixKind.PLAIN, steps: int = 60,
                    nodes=None, cap: int = oracle.DEFAULT_CAP) -> np.ndarray:
    """``f(M)_kk`` for the requested nodes (all by default).

    Dense below ``cap`` nodes, Lanczos quadrature with ``steps`` steps above.
    """
    M = build_matrix(g, kind)
    nodes = np.arange(g.n_nodes) if nodes is None else np.asarray(nodes, dtype=np.int64)
    if g.n_nodes <= cap:
        return np.diag(oracle.matrix_function(f, M, cap))[nodes].copy()
    return np.array([krylov.estimate_entry(f, M, int(k), int(k), steps) for k in nodes])


def least_central_nodes(g: Graph, f, kind=MatrixKind.PLAIN, m: int = 1,
                        steps: int = 60, cap: int = oracle.DEFAULT_CAP) -> list:
    """The ``m`` nodes with smallest ``f(M)_kk``, ties broken by node index."""
    if not 1 <= m <= g.n_nodes:
        raise ValueError(f"m must lie in [1, {g.n_nodes}], got {m}")
    vals = diagonal_values(g, f, kind, steps, cap=cap)
    order = np.lexsort((np.arange(g.n_nodes), vals))
    return sorted(int(i) for i in order[:m])


def ranking(values) -> list:
    """Node indices by decreasing value, ties by index."""
    values = np.asarray(values)
    return np.lexsort((np.arange(values.size), -values)).tolist()


def intersection_similarity(l1, l2, kappa: int) -> float:
    """Top-``kappa`` intersection similarity of two ranked lists.

    ``1 - (1/kappa) sum_t |A_t ^ B_t| / (2t)`` over the prefixes
    ``A_t, B_t`` of length ``t``; 1 iff the prefixes coincide, 0 when
    they are disjoint.
    """
    if kappa < 1:
        raise ValueError("kappa must be a positive integer")
    if kappa > min(len(l1), len(l2)):
        raise ValueError("kappa exceeds the list lengths")
    a, b = set(), set()
    total = 0.0
    for t in range(1, kappa + 1):
        a.add(l1[t - 1])
        b.add(l2[t - 1])
        total += len(a ^ b) / (2.0 * t)
    return 1.0 - total / kappa


def isim_curve(l1, l2, kappa_max: Optional[int] = None) -> np.ndarray:
    """``isim_kappa`` for ``kappa = 1..kappa_max`` in one pass."""
    kappa_max = min(len(l1), len(l2)) if kappa_max is None else kappa_max
    a, b = set(), set()
    terms = np.empty(kappa_max)
    for t in range(1, kappa_max + 1):
        a.add(l1[t - 1])
        b.add(l2[t - 1])
        terms[t - 1] = len(a ^ b) / (2.0 * t)
    return 1.0 - np.cumsum(terms) / np.arange(1, kappa_max + 1)


# --------------------------------------------------------------------------
# distance accuracy of the Krylov tracker


def tracker_table(g: Graph, n: int, threshold: float = 0.0) -> np.ndarray:
    """Row ``k`` holds the tracked distances ``d_n(k, .)``."""
    M = g.adjacency
    directed = g.directed
    return np.vstack([krylov.tracker_distances(M, k, n, directed, threshold)
                      for k in range(g.n_nodes)])


def _true_table(g: Graph) -> np.ndarray:
    return np.vstack([bfs_distances(g, k) for k in range(g.n_nodes)])


def _rho_counts(true: np.ndarray, tracked: np.ndarray, n: int) -> tuple:
    mask = np.isfinite(true)
    np.fill_diagonal(mask, False)
    # the tracker reports n for "n or more", so a true distance of exactly n
    # is recovered correctly
    wrong = (tracked != np.minimum(true, n)) | (true > n)
    return int((wrong & mask).sum()), int(mask.sum())


def rho_counts(g: Graph, n: int, threshold: float = 0.0) -> tuple:
    """``(wrong, total)`` over connected ordered pairs ``k != l``, as integers."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return _rho_counts(_true_table(g), tracker_table(g, n, threshold), n)


def rho_metric(g: Graph, n: int, threshold: float = 0.0) -> float:
    """Fraction of connected ordered pairs whose tracked distance is wrong.

    The tracker runs ``n`` Lanczos steps from every node and is compared
    with breadth-first search.
    """
    wrong, total = rho_counts(g, n, threshold)
    return wrong / total if total else 0.0


def rho_count_curve(g: Graph, ns, threshold: float = 0.0) -> dict:
    """``{n: (wrong, total)}`` from one tracker run of ``max(ns)`` steps.

    Tracked distances never change once set, so truncating the long run at
    ``n`` reproduces an ``n``-step run.
    """
    ns = sorted({int(n) for n in ns})
    if not ns or ns[0] < 1:
        raise ValueError("step counts must be positive integers")
    true = _true_table(g)
    tracked = tracker_table(g, ns[-1], threshold)
    return {n: _rho_counts(true, np.minimum(tracked, n), n) for n in ns}


def rho_curve(g: Graph, ns, threshold: float = 0.0) -> dict:
    """``{n: rho_n}`` for several step counts."""
    return {n: (w / t if t else 0.0)
            for n, (w, t) in rho_count_curve(g, ns, threshold).items()}


# --------------------------------------------------------------------------
# experiment configuration


class ExperimentError(RuntimeError):
    """Failure of one stage of an experiment run."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass
class ExperimentConfig:
    """One perturbation experiment.

    Exactly one of ``graph_path``, ``two_cycles`` and ``model`` selects the
    graph. ``perturb`` is one of ``clique:M``, ``reweight:M:ADD``,
    ``delta:FILE``, ``none`` or ``default`` (the reverse bridge for the
    two-cycles graph).
    """

    graph_path: Optional[str] = None
    two_cycles: bool = False
    model: Optional[str] = None
    directed: bool = False
    base_index: int = 0
    kind: MatrixKind = MatrixKind.PLAIN
    function: object = field(default_factory=Exp)
    perturb: str = "default"
    include_boundary: bool = False
    steps: int = 60
    region: str = "auto"
    out: Optional[str] = None
    seed: int = 0
    kappa_max: Optional[int] = None
    dense_cap: int = oracle.DEFAULT_CAP
    sample_pairs: int = SAMPLE_PAIRS

    def __post_init__(self):
        sources = [self.graph_path is not None, bool(self.two_cycles), self.model is not None]
        if sum(sources) != 1:
            raise ValueError("exactly one graph source is required")
        self.kind = MatrixKind.parse(self.kind)
        if isinstance(self.function, str):
            self.function = parse_function(self.function)
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.region not in ("auto", "segment", "disk"):
            raise ValueError("region must be auto, segment or disk")
        parse_recipe(self.perturb)


def parse_recipe(text: str) -> tuple:
    """Split a perturbation recipe into ``(name, args)``, validating it."""
    parts = text.strip().split(":", 1 if text.startswith("delta:") else -1)
    name = parts[0].lower()
    if name in ("none", "default") and len(parts) == 1:
        return name, ()
    if name == "clique" and len(parts) == 2:
        m = int(parts[1])
        if m < 1:
            raise ValueError("clique size must be at least 1")
        return name, (m,)
    if name == "reweight" and len(parts) == 3:
        m, addend = int(parts[1]), float(parts[2])
        if m < 1 or not addend > 0:
            raise ValueError("reweight needs m >= 1 and a positive addend")
        return name, (m, addend)
    if name == "delta" and len(parts) == 2:
        return name, (parts[1],)
    raise ValueError(f"bad perturbation recipe {text!r}")


def parse_model_spec(spec: str, seed: int = 0) -> LogisticModel:
    """``N:ALPHA`` (uniform random centralities) or ``file:PATH[:ALPHA]``."""
    parts = spec.split(":")
    rng = np.random.default_rng(seed)
    if parts[0] == "file":
        c = np.loadtxt(parts[1], ndmin=1)
        alpha = float(parts[2]) if len(parts) > 2 else 1.0
    else:
        c = rng.random(int(parts[0]))
        alpha = float(parts[1]) if len(parts) > 1 else 1.0
    return LogisticModel(c, alpha, seed)


def parse_delta_text(text: str, g: Graph, base_index: int = 0) -> EdgeDelta:
    """Lines ``src dst add W``, ``src dst remove`` or ``src dst reweight W``."""
    changes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            src, dst = int(tok[0]) - base_index, int(tok[1]) - base_index
            action = tok[2].lower()
            weight = float(tok[3]) if len(tok) > 3 else (None if action == "remove" else 1.0)
            changes.append(EdgeChange(src, dst, action, weight))
        except (IndexError, ValueError) as exc:
            raise ValueError(f"delta line {lineno}: {raw!r}: {exc}") from None
    if g.directed:
        return EdgeDelta(tuple(changes))
    return EdgeDelta.symmetric(changes)


def load_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.two_cycles:
        return build_two_cycles()
    if cfg.model is not None:
        return sample_graph(parse_model_spec(cfg.model, cfg.seed))
    path = Path(cfg.graph_path)
    if path.suffix.lower() in (".mtx", ".mm"):
        return read_matrix_market(path, directed=cfg.directed or None)
    return parse_edge_list(path.read_text(), directed=True if cfg.directed else None,
                           base_index=cfg.base_index, default_directed=False)


def make_delta(g: Graph, cfg: ExperimentConfig) -> tuple:
    """``(delta, chosen_nodes)`` for the configured recipe."""
    name, args = parse_recipe(cfg.perturb)
    if name == "none":
        return EdgeDelta(), []
    if name == "default":
        if not cfg.two_cycles:
            raise ValueError("the default perturbation exists only for the two-cycles graph")
        return two_cycles_perturbation(), [CYCLE_LENGTH, CYCLE_LENGTH - 1]
    if name == "delta":
        return parse_delta_text(Path(args[0]).read_text(), g, cfg.base_index), []
    nodes = least_central_nodes(g, cfg.function, cfg.kind, args[0], cfg.steps, cfg.dense_cap)
    if name == "clique":
        return clique_delta(g, nodes), nodes
    grown = sorted(set(nodes) | g.neighbors(nodes))
    return reweight_delta(g, grown, args[1], cfg.include_boundary), grown


def choose_region(g: Graph, gt: Graph, kind: MatrixKind, mode: str = "auto"):
    """Enclosing region of both fields of values.

    ``auto`` uses a disk for weighted undirected plain adjacencies and the
    default choice of :func:`spectral.enclosing_region` otherwise.
    """
    if (mode == "auto" and kind is MatrixKind.PLAIN and not g.directed
            and g.n_edges and np.any(g.adjacency.data != 1.0)):
        mode = "disk"
    region = spectral.enclosing_region(build_matrix(g, kind), build_matrix(gt, kind), kind)
    if mode == "disk" and isinstance(region, spectral.Segment):
        return spectral.Disk(region.center, region.half_length)
    if mode == "segment" and isinstance(region, spectral.Disk):
        raise ValueError("a segment region needs symmetric matrices")
    return region


@dataclass
class ExperimentResult:
    rows: list
    summary: dict
    reports: list
    csv_path: Optional[str] = None
    summary_path: Optional[str] = None


ROW_COLUMNS = ("rank", "node", "label", "dist_k_S", "dist_T_k", "delta_eff", "actual", "bound")


def _stage(name, fun, *args, **kwargs):
    try:
        return fun(*args, **kwargs)
    except ExperimentError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage tag
        raise ExperimentError(name, exc) from exc


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Perturb, bound and measure; optionally write ``<out>.csv`` and ``<out>_summary.json``.

    Rows are ordered by ``dist(k, S)``, then ``dist(T, k)``, then index, so
    the row rank is the relabeled node number.
    """
    t0 = time.perf_counter()
    g = _stage("load", load_graph, cfg)
    delta, chosen = _stage("perturb", make_delta, g, cfg)
    gt = _stage("perturb", apply_delta, g, delta)
    region = _stage("region", choose_region, g, gt, cfg.kind, cfg.region)
    nodes = np.arange(g.n_nodes)
    reports = _stage("bounds", faber_bounds.stability_report, g, delta, cfg.kind,
                     cfg.function, [(k, k) for k in nodes], region)

    dense = g.n_nodes <= cfg.dense_cap
    if dense:
        before = _stage("actual", diagonal_values, g, cfg.function, cfg.kind, cfg.steps,
                        cap=cfg.dense_cap)
        after = _stage("actual", diagonal_values, gt, cfg.function, cfg.kind, cfg.steps,
                       cap=cfg.dense_cap)
        actual = np.abs(before - after)
        sampled = None
    else:
        # above the dense cap only a seeded sample of nodes gets an actual value
        rng = np.random.default_rng(cfg.seed)
        sampled = np.sort(rng.choice(g.n_nodes, size=min(cfg.sample_pairs, g.n_nodes),
                                     replace=False))
        before = _stage("actual", diagonal_values, g, cfg.function, cfg.kind, cfg.steps,
                        sampled, cfg.dense_cap)
        after = _stage("actual", diagonal_values, gt, cfg.function, cfg.kind, cfg.steps,
                       sampled, cfg.dense_cap)
        actual = np.full(g.n_nodes, np.nan)
        actual[sampled] = np.abs(before - after)
    if not delta:
        actual = np.where(np.isnan(actual), np.nan, 0.0)
    for rep in reports:
        rep.actual = float(actual[rep.k])

    dks = np.array([r.dist_k_S for r in reports])
    dtk = np.array([r.dist_T_l for r in reports])
    order = np.lexsort((nodes, dtk, dks))
    labels = g.node_labels
    rows = []
    for rank, k in enumerate(order.tolist(), 1):
        r = reports[k]
        rows.append({"rank": rank, "node": k,
                     "label": labels[k] if labels is not None else k,
                     "dist_k_S": r.dist_k_S, "dist_T_k": r.dist_T_l,
                     "delta_eff": r.delta_eff, "actual": r.actual, "bound": r.bound})

    gaps = [r["actual"] - r["bound"] for r in rows
            if np.isfinite(r["actual"]) and np.isfinite(r["bound"])]
    if dense:
        curve = isim_curve(ranking(before), ranking(after), cfg.kappa_max)
    else:
        curve = np.array([])
    summary = {
        "n_nodes": g.n_nodes,
        "n_changes": len(delta),
        "sources": sorted(delta.sources),
        "tips": sorted(delta.tips),
        "chosen_nodes": chosen,
        "kind": cfg.kind.value,
        "function": str(cfg.function),
        "region": repr(region),
        "max_violation": max(gaps) if gaps else None,
        "failed_pairs": sum(r.error is not None for r in reports),
        "actual_sampled": sampled is not None,
        "isim": curve.tolist(),
        "runtime_s": time.perf_counter() - t0,
    }
    result = ExperimentResult(rows, summary, reports)
    if cfg.out:
        _stage("write", write_outputs, result, cfg.out)
    return result


def write_outputs(result: ExperimentResult, prefix: str) -> None:
    """Write ``<prefix>.csv`` and ``<prefix>_summary.json``; no partial CSV survives."""
    csv_path = f"{prefix}.csv"
    summary_path = f"{prefix}_summary.json"
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(csv_path, "w", newline="") as fh:
            write_rows_csv(result.rows, fh)
        with open(summary_path, "w") as fh:
            json.dump(result.summary, fh, indent=2, default=json_default)
            fh.write("\n")
    except BaseException:
        for p in (csv_path, summary_path):
            if os.path.exists(p):
                os.remove(p)
        raise
    result.csv_path, result.summary_path = csv_path, summary_path


def json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return str(x)


def write_rows_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow([r[c] if c == "label" else faber_bounds.format_number(r[c])
                    for c in ROW_COLUMNS])
