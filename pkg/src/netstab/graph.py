"""Weighted graphs, edge perturbations, normalizations and BFS distances.

A :class:`Graph` wraps a CSR adjacency matrix with nonnegative weights,
``a[i, j] = weight of the edge i -> j``. Distances are hop counts and ignore
weights.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

logger = logging.getLogger(__name__)

INF = np.inf


class GraphError(ValueError):
    """Base class for graph construction and validation errors."""


class ParseError(GraphError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class StructuralError(GraphError):
    """A matrix kind's structural precondition is violated."""


class DeltaConflict(GraphError):
    """An edge change does not match the current edge set."""


class MatrixKind(enum.Enum):
    PLAIN = "plain"
    NORMALIZED = "normalized"
    TRANSITION = "transition"

    @classmethod
    def parse(cls, value) -> "MatrixKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted graph.

    Parameters
    ----------
    adjacency : scipy.sparse matrix
        Square matrix of nonnegative weights, converted to canonical CSR.
    directed : bool
        When False the adjacency must be exactly symmetric.
    node_labels : sequence, optional
        External identifiers, one per node.
    """

    adjacency: sp.csr_matrix
    directed: bool = True
    node_labels: Optional[tuple] = None
    duplicates: int = 0

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=float, copy=True)
        if A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got {A.shape}")
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        if A.nnz and (np.any(A.data < 0) or not np.all(np.isfinite(A.data))):
            raise GraphError("edge weights must be finite and nonnegative")
        if not self.directed and (A != A.T).nnz:
            raise GraphError("undirected graph requires a symmetric adjacency")
        A.data.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        if self.node_labels is not None:
            labels = tuple(self.node_labels)
            if len(labels) != A.shape[0]:
                raise GraphError("one label per node required")
            object.__setattr__(self, "node_labels", labels)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Number of stored (directed) entries of the adjacency."""
        return self.adjacency.nnz

    def has_edge(self, i: int, j: int) -> bool:
        A = self.adjacency
        row = A.indices[A.indptr[i]:A.indptr[i + 1]]
        k = np.searchsorted(row, j)
        return bool(k < row.size and row[k] == j)

    def weight(self, i: int, j: int) -> float:
        return float(self.adjacency[i, j])

    def edges(self):
        """Yield ``(src, dst, weight)`` for every stored entry."""
        A = self.adjacency.tocoo()
        for i, j, w in zip(A.row.tolist(), A.col.tolist(), A.data.tolist()):
            yield i, j, w

    def neighbors(self, nodes: Iterable[int]) -> set:
        """Nodes adjacent to ``nodes`` in either direction, excluding them."""
        nodes = set(nodes)
        A = self.adjacency
        out = set()
        for i in nodes:
            out.update(A.indices[A.indptr[i]:A.indptr[i + 1]].tolist())
        if self.directed:
            AT = A.T.tocsr()
            for i in nodes:
                out.update(AT.indices[AT.indptr[i]:AT.indptr[i + 1]].tolist())
        return out - nodes

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self.directed != other.directed or self.n_nodes != other.n_nodes:
            return False
        return (self.adjacency != other.adjacency).nnz == 0

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph({kind}, n_nodes={self.n_nodes}, entries={self.n_edges})"


def from_edges(n_nodes: int, edges, directed: bool = True,
               node_labels=None) -> Graph:
    """Build a graph from ``(src, dst[, weight])`` tuples.

    Repeated ordered pairs are summed. For undirected graphs each listed
    edge is mirrored; listing both directions with the same weight is the
    same as listing one.
    """
    src, dst, w = [], [], []
    for e in edges:
        src.append(e[0])
        dst.append(e[1])
        w.append(e[2] if len(e) > 2 else 1.0)
    return _assemble(n_nodes, np.asarray(src, dtype=np.int64),
                     np.asarray(dst, dtype=np.int64),
                     np.asarray(w, dtype=float), directed, node_labels)


def _assemble(n, src, dst, w, directed, node_labels=None) -> Graph:
    if src.size and (src.min() < 0 or dst.min() < 0
                     or src.max() >= n or dst.max() >= n):
        raise GraphError("node index out of range")
    if np.any(w <= 0):
        raise GraphError("edge weights must be strictly positive")
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    if src.size:
        new = np.ones(src.size, dtype=bool)
        new[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
        duplicates = int(src.size - new.sum())
    else:
        duplicates = 0
    if duplicates:
        logger.warning("summed %d duplicate edge entries", duplicates)
    A = sp.csr_matrix((w, (src, dst)), shape=(n, n))
    A.sum_duplicates()
    if not directed:
        AT = A.T.tocsr()
        both = A.multiply(AT > 0)
        if (both != both.T).nnz:
            raise GraphError("conflicting weights for the two directions "
                             "of an undirected edge")
        # keep A where present, fill the missing direction from A^T
        A = A + AT - AT.multiply(A > 0)
    return Graph(A, directed=directed, node_labels=node_labels,
                 duplicates=duplicates)


def parse_edge_list(text, directed: Optional[bool] = None, base_index: int = 0,
                    n_nodes: Optional[int] = None, default_directed: bool = True) -> Graph:
    """Parse ``src dst [weight]`` lines.

    Blank lines and lines starting with ``#`` or ``%`` are skipped, except
    a ``# nodes N [directed|undirected]`` header which fixes the node count
    (isolated nodes) and, when ``directed`` is None, the orientation.
    Without either, ``default_directed`` applies.
    ``text`` may be a str, bytes or a readable text/binary stream.
    """
    if base_index not in (0, 1):
        raise ValueError("base_index must be 0 or 1")
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    src, dst, w = [], [], []
    declared = 0
    header_directed = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            head = line.lstrip("#% ").split()
            if len(head) >= 2 and head[0] == "nodes" and head[1].isdigit():
                declared = int(head[1])
                if len(head) >= 3 and head[2] in ("directed", "undirected"):
                    header_directed = head[2] == "directed"
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise ParseError(lineno, raw, "expected 'src dst [weight]'")
        try:
            i, j = int(parts[0]) - base_index, int(parts[1]) - base_index
        except ValueError:
            raise ParseError(lineno, raw, "node ids must be integers") from None
        if i < 0 or j < 0:
            raise ParseError(lineno, raw, "negative node id")
        weight = 1.0
        if len(parts) == 3:
            try:
                weight = float(parts[2])
            except ValueError:
                raise ParseError(lineno, raw, "weight is not a number") from None
            if not np.isfinite(weight) or weight <= 0:
                raise ParseError(lineno, raw, "weight must be positive")
        src.append(i)
        dst.append(j)
        w.append(weight)
    if directed is None:
        directed = default_directed if header_directed is None else header_directed
    n = max(max(src, default=-1), max(dst, default=-1), declared - 1) + 1
    if n_nodes is not None:
        if n_nodes < n:
            raise GraphError(f"edge list references node {n - 1} "
                             f"but n_nodes={n_nodes}")
        n = n_nodes
    return _assemble(n, np.asarray(src, dtype=np.int64),
                     np.asarray(dst, dtype=np.int64),
                     np.asarray(w, dtype=float), directed)


def serialize_edge_list(g: Graph, base_index: int = 0) -> str:
    """Inverse of :func:`parse_edge_list` (15 significant digits).

    Undirected graphs are written with one line per edge ``i <= j``.
    """
    out = io.StringIO()
    out.write(f"# nodes {g.n_nodes} {'directed' if g.directed else 'undirected'}\n")
    for i, j, w in g.edges():
        if not g.directed and j < i:
            continue
        out.write(f"{i + base_index} {j + base_index} {w:.15g}\n")
    return out.getvalue()


def read_matrix_market(path_or_stream, directed: Optional[bool] = None) -> Graph:
    """Read a MatrixMarket coordinate file (pattern/real, general/symmetric).

    Symmetric files give undirected graphs unless ``directed`` says otherwise.
    """
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        with open(path_or_stream, "rb") as fh:
            header = fh.readline().decode().lower()
    else:
        header = path_or_stream.readline()
        if isinstance(header, bytes):
            header = header.decode()
        header = header.lower()
        path_or_stream.seek(0)
    symmetric = "symmetric" in header
    M = sp.coo_matrix(scipy.io.mmread(path_or_stream))
    if M.shape[0] != M.shape[1]:
        raise GraphError(f"MatrixMarket matrix is not square: {M.shape}")
    if directed is None:
        directed = not symmetric
    data = np.abs(np.asarray(M.data, dtype=float))
    keep = data > 0
    return _assemble(M.shape[0], M.row[keep].astype(np.int64),
                     M.col[keep].astype(np.int64), data[keep], directed)


# --------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class EdgeChange:
    src: int
    dst: int
    action: str  # "add" | "remove" | "reweight"
    weight: Optional[float] = None

    def __post_init__(self):
        if self.action not in ("add", "remove", "reweight"):
            raise ValueError(f"unknown action {self.action!r}")
        if self.action == "remove":
            if self.weight is not None:
                raise ValueError("remove takes no weight")
        elif self.weight is None or not self.weight > 0 or not np.isfinite(self.weight):
            raise ValueError(f"{self.action} needs a positive weight")


@dataclass(frozen=True)
class EdgeDelta:
    """A set of edge additions, removals and reweights.

    ``sources`` and ``tips`` are the start and end nodes of the changed
    edges.
    """

    changes: tuple = ()
    sources: frozenset = field(init=False)
    tips: frozenset = field(init=False)

    def __post_init__(self):
        changes = tuple(self.changes)
        pairs = [(c.src, c.dst) for c in changes]
        if len(set(pairs)) != len(pairs):
            raise ValueError("an edge may be changed at most once per delta")
        object.__setattr__(self, "changes", changes)
        object.__setattr__(self, "sources", frozenset(c.src for c in changes))
        object.__setattr__(self, "tips", frozenset(c.dst for c in changes))

    def __len__(self):
        return len(self.changes)

    def __bool__(self):
        return bool(self.changes)

    @classmethod
    def symmetric(cls, changes) -> "EdgeDelta":
        """Close ``changes`` under reversal, as undirected graphs require."""
        out = {}
        for c in changes:
            out[(c.src, c.dst)] = c
            rev = EdgeChange(c.dst, c.src, c.action, c.weight)
            prev = out.get((c.dst, c.src))
            if prev is not None and prev != rev:
                raise ValueError(f"inconsistent changes for edge {c.src}-{c.dst}")
            out[(c.dst, c.src)] = rev
        return cls(tuple(out.values()))

    def is_symmetric(self) -> bool:
        lookup = {(c.src, c.dst): c for c in self.changes}
        return all(
            (c.dst, c.src) in lookup
            and lookup[(c.dst, c.src)].action == c.action
            and lookup[(c.dst, c.src)].weight == c.weight
            for c in self.changes)


def clique_delta(g: Graph, nodes: Iterable[int], weight: float = 1.0) -> EdgeDelta:
    """Add every missing edge between distinct members of ``nodes``."""
    nodes = sorted(set(nodes))
    changes = [EdgeChange(i, j, "add", weight)
               for i in nodes for j in nodes
               if i != j and not g.has_edge(i, j)]
    return EdgeDelta(tuple(changes))


def reweight_delta(g: Graph, nodes: Iterable[int], addend: float,
                   include_boundary: bool = False) -> EdgeDelta:
    """Increase by ``addend`` the weight of every edge inside ``nodes``.

    With ``include_boundary`` the edges joining ``nodes`` to their
    neighbourhood are reweighted too.
    """
    nodes = set(nodes)
    changes = []
    for i, j, w in g.edges():
        inside = i in nodes and j in nodes
        touching = i in nodes or j in nodes
        if inside or (include_boundary and touching):
            changes.append(EdgeChange(i, j, "reweight", w + addend))
    return EdgeDelta(tuple(changes))


def _check_delta(g: Graph, d: EdgeDelta):
    n = g.n_nodes
    for c in d.changes:
        if not (0 <= c.src < n and 0 <= c.dst < n):
            raise DeltaConflict(f"edge {c.src}->{c.dst} out of range")
        present = g.has_edge(c.src, c.dst)
        if c.action == "add" and present:
            raise DeltaConflict(f"cannot add existing edge {c.src}->{c.dst}")
        if c.action in ("remove", "reweight") and not present:
            raise DeltaConflict(f"cannot {c.action} absent edge {c.src}->{c.dst}")
    if not g.directed and not d.is_symmetric():
        raise DeltaConflict("delta on an undirected graph must be symmetric")


def apply_delta(g: Graph, d: EdgeDelta) -> Graph:
    """Return the perturbed graph; ``g`` is left untouched."""
    _check_delta(g, d)
    if not d:
        return g
    A = g.adjacency.tolil(copy=True)
    for c in d.changes:
        A[c.src, c.dst] = 0.0 if c.action == "remove" else c.weight
    return Graph(A.tocsr(), directed=g.directed, node_labels=g.node_labels)


def inverse_delta(g: Graph, d: EdgeDelta) -> EdgeDelta:
    """The delta that maps ``apply_delta(g, d)`` back to ``g``."""
    _check_delta(g, d)
    inv = []
    for c in d.changes:
        if c.action == "add":
            inv.append(EdgeChange(c.src, c.dst, "remove"))
        elif c.action == "remove":
            inv.append(EdgeChange(c.src, c.dst, "add", g.weight(c.src, c.dst)))
        else:
            inv.append(EdgeChange(c.src, c.dst, "reweight", g.weight(c.src, c.dst)))
    return EdgeDelta(tuple(inv))


# --------------------------------------------------------------------------
# matrices


def build_matrix(g: Graph, kind=MatrixKind.PLAIN) -> sp.csr_matrix:
    """Adjacency ``A``, normalized ``D^-1/2 A D^-1/2`` or transition ``D_out^-1 A``.

    Degrees are sums of incident weights.
    """
    kind = MatrixKind.parse(kind)
    A = g.adjacency
    if kind is MatrixKind.PLAIN:
        return A.copy()
    if A.diagonal().any():
        loop = int(np.flatnonzero(A.diagonal())[0])
        raise StructuralError(f"self-loop at node {loop} not allowed for {kind.value}")
    deg = np.asarray(A.sum(axis=1)).ravel()
    dangling = np.flatnonzero(deg == 0)
    if dangling.size:
        raise StructuralError(f"node {int(dangling[0])} has no outgoing edge "
                              f"({kind.value} matrix undefined)")
    if kind is MatrixKind.TRANSITION:
        return sp.csr_matrix(sp.diags(1.0 / deg) @ A)
    if g.directed:
        raise StructuralError("normalized adjacency requires an undirected graph")
    s = 1.0 / np.sqrt(deg)
    M = A.tocoo()
    # s_i*s_j is commutative, so (i,j) and (j,i) agree bitwise
    vals = M.data * (s[M.row] * s[M.col])
    N = sp.csr_matrix((vals, (M.row, M.col)), shape=A.shape)
    N.sort_indices()
    return N


# --------------------------------------------------------------------------
# distances


def bfs_distances(g: Graph, source: int, reverse: bool = False,
                  max_depth: Optional[int] = None) -> np.ndarray:
    """Hop counts from ``source`` (to ``source`` when ``reverse``).

    Unreachable nodes get ``inf``.
    """
    A = g.adjacency.T.tocsr() if (reverse and g.directed) else g.adjacency
    return _bfs(A, [source], max_depth)


def _bfs(A: sp.csr_matrix, sources: Sequence[int], max_depth=None) -> np.ndarray:
    n = A.shape[0]
    dist = np.full(n, INF)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    dist[frontier] = 0
    depth = 0
    indptr, indices = A.indptr, A.indices
    while frontier.size and (max_depth is None or depth < max_depth):
        depth += 1
        starts, ends = indptr[frontier], indptr[frontier + 1]
        nbrs = np.concatenate([indices[s:e] for s, e in zip(starts, ends)]) \
            if frontier.size else np.empty(0, dtype=np.int64)
        nbrs = np.unique(nbrs)
        nbrs = nbrs[np.isinf(dist[nbrs])]
        dist[nbrs] = depth
        frontier = nbrs
    return dist


def set_distances(g: Graph, nodes: Iterable[int], reverse: bool = False) -> np.ndarray:
    """Vector of ``dist(S, m)`` for every m (``dist(m, S)`` when ``reverse``)."""
    nodes = list(nodes)
    if not nodes:
        raise ValueError("node set must be nonempty")
    A = g.adjacency.T.tocsr() if (reverse and g.directed) else g.adjacency
    return _bfs(A, nodes)


def dist_to_set(g: Graph, k: int, s: Iterable[int], direction: str = "from-k") -> float:
    """``dist(k, S)`` (``direction='from-k'``) or ``dist(S, k)`` (``'to-k'``)."""
    s = set(s)
    if not s:
        raise ValueError("node set must be nonempty")
    if direction not in ("from-k", "to-k"):
        raise ValueError("direction must be 'from-k' or 'to-k'")
    if k in s:
        return 0.0
    d = bfs_distances(g, k, reverse=(direction == "to-k"))
    return float(d[list(s)].min())


def all_pairs_distances(g: Graph) -> np.ndarray:
    """Dense matrix ``D[i, j] = dist(i, j)`` by repeated BFS."""
    return np.vstack([bfs_distances(g, i) for i in range(g.n_nodes)])
