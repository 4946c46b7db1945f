"""
Distances for free from the Lanczos process
===========================================

Each Lanczos step widens the support of the basis vectors by one hop, so
the first step at which a node shows up is its distance from the start.
The same run gives the quadrature estimate of f(A)_kk.
"""

import numpy as np
import scipy.sparse as sp

from netstab import Exp, Graph
from netstab.experiments import rho_curve
from netstab.graph import bfs_distances
from netstab.krylov import estimate_entry, tracker_distances
from netstab.oracle import dense_expm

rng = np.random.default_rng(3)
n = 300
M = np.triu(rng.random((n, n)) < 0.012, 1).astype(float)
g = Graph(sp.csr_matrix(M + M.T), directed=False)

# tracked vs true distances from node 0 after 6 steps; 6 means "6 or more"
d6 = tracker_distances(g.adjacency, 0, 6, directed=False)
true = bfs_distances(g, 0)
close = true <= 6
print("agree within 6 hops:", bool(np.all(d6[close] == true[close])))

# the fraction of wrong pairs falls to zero once n reaches the diameter
for steps, rho in rho_curve(g, range(1, 16)).items():
    print(f"n = {steps:2d}   rho_n = {rho:.4e}")

# centrality of a few nodes: quadrature vs dense exponential
E = dense_expm(g.adjacency.toarray())
for k in (0, 10, 200):
    est = estimate_entry(Exp(), g.adjacency, k, k, 30)
    print(f"exp(A)[{k},{k}]  lanczos {est:.15g}  dense {E[k, k]:.15g}")
