"""
Two cycles and one extra edge
=============================

Two undirected cycles of 111 nodes, joined by a single directed edge from
node 111 to node 112. Every node on a cycle has the same exp-centrality.
We add the reverse edge 112 -> 111 and ask how far the change travels.
"""

import numpy as np

from netstab import Exp, Resolvent
from netstab.experiments import ExperimentConfig, run_experiment

# the runner builds the graph, applies the default perturbation, picks an
# enclosing disk for the field of values and compares bound with actual
results = {}
for f in (Exp(), Resolvent(1 / 3)):
    res = results[str(f)] = run_experiment(ExperimentConfig(two_cycles=True, function=f))
    print(f"\nf = {f}   region {res.summary['region']}")
    print(f"{'delta':>6} {'actual':>12} {'bound':>12}")

    # rows come sorted by distance from the changed nodes; show one per delta
    seen = set()
    for r in res.rows:
        if r["delta_eff"] in seen or r["delta_eff"] > 25:
            continue
        seen.add(r["delta_eff"])
        print(f"{r['delta_eff']:6.0f} {r['actual']:12.3e} {r['bound']:12.3e}")
    print("max(actual - bound) =", res.summary["max_violation"])

# for exp, every node with delta >= 21 is certified unchanged to about
# 12 digits without ever forming exp(A)
rows = results["exp"].rows
far = [r for r in rows if r["delta_eff"] >= 21]
print(f"\nexp: {len(far)} of {len(rows)} nodes have bound <= {max(r['bound'] for r in far):.1e}")
actual = np.array([r["actual"] for r in rows])
print("exp: nodes whose actual change exceeds 1e-12:", int((actual > 1e-12).sum()))
