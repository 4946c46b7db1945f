"""Matrix-function centrality, Krylov distances and perturbation decay bounds."""

from .functions import Custom, Exp, Resolvent, parse_function
from .graph import (EdgeChange, EdgeDelta, Graph, MatrixKind, apply_delta, bfs_distances,
                    build_matrix, dist_to_set, from_edges, parse_edge_list,
                    serialize_edge_list)
from .spectral import Disk, Ellipse, Segment, enclosing_region, numerical_radius
from .faber_bounds import (BoundReport, effective_delta, exp_bound, generic_tau_bound,
                           resolvent_bound, stability_report)
from .krylov import estimate_entry, lanczos_hermitian, lanczos_nonhermitian

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "Custom", "Disk", "EdgeChange", "EdgeDelta", "Ellipse", "Exp", "Graph",
    "MatrixKind", "Resolvent", "Segment", "apply_delta", "bfs_distances", "build_matrix",
    "dist_to_set", "effective_delta", "enclosing_region", "estimate_entry", "exp_bound",
    "from_edges", "generic_tau_bound", "lanczos_hermitian", "lanczos_nonhermitian",
    "numerical_radius", "parse_edge_list", "parse_function", "resolvent_bound",
    "serialize_edge_list", "stability_report",
]
