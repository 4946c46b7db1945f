"""
Connecting the least central nodes
==================================

Pick the five nodes with the smallest exp-centrality of the normalized
adjacency, fully connect them, and see which centralities can move.
The field of values of the normalized matrix lies in [-1, 1], so the
bounds use the unit segment.
"""

import numpy as np
import scipy.sparse as sp

from netstab import Exp, Graph, MatrixKind
from netstab.experiments import (clique_delta, diagonal_values, isim_curve, least_central_nodes,
                                 ranking)
from netstab.faber_bounds import stability_report
from netstab.graph import apply_delta
from netstab.oracle import exact_variation

rng = np.random.default_rng(8)
n = 150
M = np.triu(rng.random((n, n)) < 0.03, 1).astype(float)
idx = rng.permutation(n)
M[idx[:-1], idx[1:]] = 1          # a spanning path keeps it connected
M = ((M + M.T) > 0).astype(float)
g = Graph(sp.csr_matrix(M), directed=False)

kind = MatrixKind.NORMALIZED
S = least_central_nodes(g, Exp(), kind, 5)
d = clique_delta(g, S)
print("least central:", S, "  new edges:", len(d) // 2)

# bounds need k outside the changed set for the normalized matrix
pairs = [(k, k) for k in range(n) if k not in d.sources]
reports = stability_report(g, d, kind, Exp(), pairs)
actual = exact_variation(g, d, kind, Exp(), pairs)
deltas = sorted({r.delta_eff for r in reports})
for delta in deltas[:6]:
    sel = [i for i, r in enumerate(reports) if r.delta_eff == delta]
    print(f"delta {delta}: {len(sel):3d} nodes, max actual {max(actual[sel]):.2e}, "
              f"bound {reports[sel[0]].bound:.2e}")

# does the ranking change? intersection similarity of the top lists
before = ranking(diagonal_values(g, Exp(), kind))
after = ranking(diagonal_values(apply_delta(g, d), Exp(), kind))
print("isim for top 10 / 50 / 150:", np.round(isim_curve(before, after)[[9, 49, 149]], 4))
