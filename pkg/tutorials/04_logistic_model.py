"""
Distances in a logistic attachment model
========================================

Edges i -> j appear with probability s(c_j - c_i), a logistic function of
the centrality gap. A node much less central than a set S is unlikely to
reach S in a few steps, and there is a closed-form lower bound for that.
"""

import numpy as np

from netstab.model import LogisticModel, distance_prob_lower_bound, empirical_distance_prob

N, s, n = 40, 3, 2
c = np.zeros(N)
c[s] = 8.0                         # node 3 sits far above S = {0, 1, 2}
model = LogisticModel(c, alpha=1.0, seed=0, strict=False)

bound = distance_prob_lower_bound(N, s, c_S=0.0, c_i=8.0, alpha=1.0, n=n)
p = empirical_distance_prob(model, i=s, S=range(s), n=n, n_graphs=50_000)
print(f"P(dist(3, S) > {n}):  bound {bound:.4f}   Monte Carlo {p:.4f}")

# the bound weakens as the gap closes; by gap 6 it is 0 (vacuous), even
# though Monte Carlo still sees most samples far from S
for gap in (10.0, 8.0, 7.0, 6.0, 5.0):
    m = LogisticModel(np.where(np.arange(N) == s, gap, 0.0), 1.0, seed=1, strict=False)
    mc = empirical_distance_prob(m, s, range(s), n, 20_000)
    print(f"gap {gap:4.1f}: bound {distance_prob_lower_bound(N, s, 0.0, gap, 1.0, n):.4f}"
          f"   Monte Carlo {mc:.4f}")
