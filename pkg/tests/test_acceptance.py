"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION <n> PASS|FAIL|SKIPPED`` line with the
measured quantities. Run ``pytest tests/test_acceptance.py -s`` to see them,
or ``python tests/test_acceptance.py`` for the bare summary.
"""

import math
import os
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from netstab.experiments import ExperimentConfig, rho_count_curve, run_experiment
from netstab.faber_bounds import (DistanceTables, exp_bound, minimize_tau_bound, p_factor,
                                  q_factor, stability_report)
from netstab.functions import Exp, Resolvent
from netstab.graph import (EdgeChange, EdgeDelta, Graph, MatrixKind, StructuralError,
                           all_pairs_distances, apply_delta, build_matrix, read_matrix_market,
                           parse_edge_list)
from netstab.krylov import LanczosBreakdown, estimate_entry
from netstab.model import LogisticModel, distance_prob_lower_bound, empirical_distance_prob
from netstab.oracle import dense_expm, dense_resolvent, matrix_function
from netstab.spectral import Disk, numerical_radius, single_entry_shift_check

# tolerances from the acceptance criteria
DOMINANCE_SLACK = 1e-12
INVARIANCE_TOL = 1e-13
SHIFT_SLACK = 1e-12
KRYLOV_TOL = 1e-8
ASYMPTOTIC_TOL = 1e-5
GENERIC_FACTOR = 1.01
MC_SIGMAS = 3.0
MAX_BREAKDOWN_RATE = 0.01

ERDOS_FILE = os.environ.get("NETSTAB_ERDOS", "")


def report(number, ok, detail, elapsed=None, budget=None):
    timing = "" if elapsed is None else f" [{elapsed:.1f}s / {budget:.0f}s]"
    print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {detail}{timing}")
    assert ok, detail


# --- random graph builders -------------------------------------------------

def connected(M):
    return connected_components(sp.csr_matrix(M), directed=False)[0] == 1


def erdos_renyi(n, rng):
    p = 1.3 * math.log(n) / n
    while True:
        M = np.triu(rng.random((n, n)) < p, 1).astype(float)
        M = M + M.T
        if connected(M):
            return Graph(sp.csr_matrix(M), directed=False)


def small_world(n, rng, k=4, beta=0.1):
    while True:
        M = np.zeros((n, n))
        for j in range(1, k // 2 + 1):
            idx = np.arange(n)
            M[idx, (idx + j) % n] = 1
        # rewire each lattice edge with probability beta
        for i, j in zip(*np.nonzero(np.triu(M, 1) + np.tril(M, -1))):
            if rng.random() < beta:
                new = int(rng.integers(n))
                if new != i and M[i, new] == 0 and M[new, i] == 0:
                    M[i, j] = 0
                    M[i, new] = 1
        M = ((M + M.T) > 0).astype(float)
        if connected(M):
            return Graph(sp.csr_matrix(M), directed=False)


def sparse_graph(n, rng, directed):
    M = (rng.random((n, n)) < 3.0 / n) * rng.integers(1, 4, (n, n)).astype(float)
    np.fill_diagonal(M, 0)
    if not directed:
        M = np.triu(M, 1)
        M = M + M.T
    return Graph(sp.csr_matrix(M), directed=directed)


def random_delta(g, rng, size=3):
    n = g.n_nodes
    nodes = rng.choice(n, size=size, replace=False)
    changes = []
    for i in nodes:
        for j in nodes:
            if (i != j if g.directed else i < j) and rng.random() < 0.6:
                i, j = int(i), int(j)
                if not g.has_edge(i, j):
                    changes.append(EdgeChange(i, j, "add", 1.0))
                elif rng.random() < 0.5:
                    changes.append(EdgeChange(i, j, "remove"))
                else:
                    changes.append(EdgeChange(i, j, "reweight", 3.0))
    if not changes:
        i, j = int(nodes[0]), int(nodes[1])
        changes = [EdgeChange(i, j, "remove") if g.has_edge(i, j) else EdgeChange(i, j, "add", 1.0)]
    return EdgeDelta(tuple(changes)) if g.directed else EdgeDelta.symmetric(changes)


# --- criteria --------------------------------------------------------------

def test_criterion_1_distance_tracker():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad = []
    for idx in range(50):
        n = int(rng.integers(100, 501))
        g = erdos_renyi(n, rng) if idx % 2 == 0 else small_world(n, rng)
        diam = int(all_pairs_distances(g).max())
        ns = list(range(1, diam + 2))
        counts = rho_count_curve(g, ns)
        rho = [counts[m][0] / counts[m][1] for m in ns]
        if any(b > a for a, b in zip(rho, rho[1:])) or counts[diam][0] or counts[diam + 1][0]:
            bad.append(idx)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    report(1, ok, f"50 random graphs (ER/small-world, 100-500 nodes): rho_n = 0 for n >= diameter "
                  f"and nonincreasing; failures {bad}", elapsed, 60)


def test_criterion_1_erdos_table():
    if not ERDOS_FILE:
        print("\nCRITERION 1b SKIPPED: Erdos dataset not supplied (set NETSTAB_ERDOS)")
        pytest.skip("Erdos dataset not supplied (NETSTAB_ERDOS)")
    if ERDOS_FILE.endswith(".mtx"):
        g = read_matrix_market(ERDOS_FILE)
    else:
        with open(ERDOS_FILE) as fh:
            g = parse_edge_list(fh.read(), default_directed=False)
    counts = rho_count_curve(g, [7, 9])
    r7, r9 = (counts[m][0] / counts[m][1] for m in (7, 9))
    ok = f"{r7:.4e}" == "1.7188e-02" and f"{r9:.4e}" == "5.4461e-04"
    report("1b", ok, f"Erdos rho_7 = {counts[7][0]}/{counts[7][1]} = {r7:.4e}, "
                     f"rho_9 = {counts[9][0]}/{counts[9][1]} = {r9:.4e}")


def test_criterion_2_bound_dominance():
    rng = np.random.default_rng(2)
    kinds = (MatrixKind.PLAIN, MatrixKind.NORMALIZED, MatrixKind.TRANSITION)
    t0 = time.perf_counter()
    instances = pairs_checked = violations = 0
    worst = -math.inf
    while instances < 1000:
        kind = kinds[instances % 3]
        directed = kind is not MatrixKind.NORMALIZED and rng.random() < 0.5
        n = int(rng.integers(10, 61))
        g = sparse_graph(n, rng, directed)
        d = random_delta(g, rng)
        gt = apply_delta(g, d)
        try:
            A, B = build_matrix(g, kind), build_matrix(gt, kind)
        except StructuralError:
            continue
        nu = max(numerical_radius(A), numerical_radius(B))
        pairs = [(k, l) for k in range(n) for l in range(n)]
        for f in (Exp(), Resolvent(1.0 / (1.5 * nu) if nu > 0 else 1.0)):
            act = np.abs(matrix_function(f, A) - matrix_function(f, B))
            for r in stability_report(g, d, kind, f, pairs):
                if r.error or not math.isfinite(r.delta_eff):
                    continue
                pairs_checked += 1
                gap = act[r.k, r.l] - r.bound
                worst = max(worst, gap)
                violations += gap > DOMINANCE_SLACK
            instances += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 120
    report(2, ok, f"{instances} instances, {pairs_checked} finite-delta pairs, "
                  f"{violations} violations, max(actual - bound) = {worst:.2e}", elapsed, 120)


def test_criterion_3_two_cycles():
    t0 = time.perf_counter()
    details, ok = [], True
    for f, name in ((Exp(), "exp"), (Resolvent(1 / 3), "r_1/3")):
        res = run_experiment(ExperimentConfig(two_cycles=True, function=f))
        rows = res.rows
        dominated = all(r["actual"] <= r["bound"] + DOMINANCE_SLACK for r in rows)
        # largest actual per effective distance must decay; below 1e-12 the
        # dense oracle only reports rounding noise, so values are floored there
        by_delta = {}
        for r in rows:
            v = max(r["actual"], 1e-12)
            by_delta[r["delta_eff"]] = max(by_delta.get(r["delta_eff"], 0.0), v)
        ds = sorted(by_delta)
        decays = all(by_delta[b] <= by_delta[a] for a, b in zip(ds, ds[1:]))
        # fit where both sides carry information: actual above the oracle's
        # rounding floor and a finite bound (the exp disk bound is +inf for small delta)
        fit = [r for r in rows if r["actual"] > 1e-12 and math.isfinite(r["bound"])]
        x = np.array([r["delta_eff"] for r in fit], dtype=float)
        slope_actual = np.polyfit(x, np.log([r["actual"] for r in fit]), 1)[0]
        slope_bound = np.polyfit(x, np.log([r["bound"] for r in fit]), 1)[0]
        this = dominated and decays and slope_actual < slope_bound
        ok &= this
        details.append(f"{name}: max gap {res.summary['max_violation']:.1e}, slopes "
                       f"{slope_actual:.2f} < {slope_bound:.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    report(3, ok, "; ".join(details), elapsed, 30)


def test_criterion_4_invariance():
    rng = np.random.default_rng(4)
    kinds = (MatrixKind.PLAIN, MatrixKind.NORMALIZED, MatrixKind.TRANSITION)
    instances = failures = checks = 0
    worst = 0.0
    while instances < 500:
        kind = kinds[instances % 3]
        directed = kind is not MatrixKind.NORMALIZED and rng.random() < 0.5
        n = int(rng.integers(6, 31))
        g = sparse_graph(n, rng, directed)
        d = random_delta(g, rng)
        gt = apply_delta(g, d)
        try:
            A = build_matrix(g, kind).toarray()
            B = build_matrix(gt, kind).toarray()
        except StructuralError:
            continue
        instances += 1
        P, Q = np.eye(n), np.eye(n)
        tables = DistanceTables.build(g, d)
        D = np.full((n, n), -1.0)
        for k in range(n):
            for l in range(n):
                if kind is MatrixKind.NORMALIZED and (k in d.sources or l in d.sources):
                    continue
                D[k, l] = min(tables.effective(k, l, kind), n)
        for m in range(n + 1):
            mask = D >= m
            diff = np.abs(P - Q)[mask]
            checks += int(mask.sum())
            if kind is MatrixKind.PLAIN:
                failures += int(np.count_nonzero(diff))
            else:
                failures += int(np.count_nonzero(diff > INVARIANCE_TOL))
                worst = max(worst, float(diff.max(initial=0.0)))
            P, Q = P @ A, Q @ B
    report(4, failures == 0, f"500 instances, {checks} (k, l, n) checks, {failures} failures, "
                             f"max normalized/transition deviation {worst:.1e}")


def test_criterion_5_radius_shift():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    part1_bad = 0
    for _ in range(1000):
        n = int(rng.integers(2, 41))
        A = (rng.random((n, n)) < rng.uniform(0.05, 0.5)) * rng.random((n, n))
        np.fill_diagonal(A, 0)
        if rng.random() < 0.5:
            A = np.triu(A, 1)
            A = A + A.T
        m, l = rng.choice(n, 2, replace=False)
        eps = 10 ** rng.uniform(-4, 1)
        _, _, shift = single_entry_shift_check(sp.csr_matrix(A), int(m), int(l), eps)
        part1_bad += not (-SHIFT_SLACK <= shift <= eps / 2 + SHIFT_SLACK)
    # part 2 on symmetric irreducible instances, f = exp, dense eigen oracle
    eps, tried, part2_bad, worst = 1e-3, 0, 0, 0.0
    while tried < 200:
        n = int(rng.integers(5, 41))
        A = np.triu((rng.random((n, n)) < 0.3) * rng.uniform(0.5, 2.0, (n, n)), 1)
        A = A + A.T
        if not connected(A):
            continue
        lam = np.linalg.eigvalsh(A)
        if lam[-1] - lam[-2] < eps / 2:
            continue
        tried += 1
        m, l = (int(v) for v in rng.choice(n, 2, replace=False))
        B = A.copy()
        B[m, l] += eps
        shift = np.linalg.eigvalsh((B + B.T) / 2)[-1] - lam[-1]
        E = dense_expm(A)
        first_order = eps * math.sqrt(E[m, m] * E[l, l]) / math.exp(lam[-1])
        worst = max(worst, shift / first_order)
        part2_bad += not (0 < shift <= 2 * first_order)
    elapsed = time.perf_counter() - t0
    ok = part1_bad == 0 and part2_bad == 0
    report(5, ok, f"part 1: 1000 shifts, {part1_bad} outside [0, eps/2]; part 2: {tried} symmetric "
                  f"irreducible instances at eps=1e-3, {part2_bad} above 2x first-order bound "
                  f"(max ratio {worst:.3f})", elapsed, 600)


def mc_tuple(rng):
    N = int(rng.integers(8, 21))
    s = int(rng.integers(1, 4))
    n = int(rng.integers(1, 4))
    C = math.comb(N - s, n)
    target = rng.uniform(0.05, 1.2)
    gap = -math.log(C / target - 1.0)
    c = np.empty(N)
    c[0] = 0.0
    c[1:s] = -rng.uniform(0.0, 1.0, s - 1)
    i = s
    c[i] = -gap
    lo, hi = min(c[i], 0.0) - 2.0, max(c[i], 0.0) + 2.0
    c[s + 1:] = rng.uniform(lo, hi, N - s - 1)
    return N, s, n, c, i


def test_criterion_6_probability_bound():
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    bad, nontrivial = [], 0
    for t in range(100):
        N, s, n, c, i = mc_tuple(rng)
        model = LogisticModel(c, alpha=1.0, seed=1000 + t, strict=False)
        S = range(s)
        bound = distance_prob_lower_bound(N, s, float(c[:s].max()), float(c[i]), 1.0, n)
        p = empirical_distance_prob(model, i, S, n, 10_000)
        se = max(math.sqrt(p * (1 - p) / 10_000), 1.0 / 10_000)
        nontrivial += bound > 0
        if p < bound - MC_SIGMAS * se:
            bad.append((t, p, bound))
    elapsed = time.perf_counter() - t0
    report(6, not bad, f"100 tuples x 10^4 graphs, {nontrivial} with a nonzero bound, "
                       f"{len(bad)} below bound - 3 SE {bad[:3]}", elapsed, 600)


def test_criterion_7_krylov_vs_oracle():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    runs = fails = nonsym_runs = breakdowns = 0
    worst = 0.0
    for idx in range(16):
        directed = idx % 2 == 1
        n = int(rng.integers(100, 201))
        g = sparse_graph(n, rng, directed)
        A = g.adjacency
        dense = A.toarray()
        nu = numerical_radius(A)
        funcs = [(Exp(), dense_expm(dense))]
        alpha = 1.0 / (1.5 * nu)
        funcs.append((Resolvent(alpha), dense_resolvent(dense, alpha)))
        entries = [(int(k), int(k)) for k in rng.choice(n, 5, replace=False)]
        entries += [tuple(int(v) for v in rng.choice(n, 2, replace=False)) for _ in range(5)]
        for f, F in funcs:
            for k, l in entries:
                runs += 1
                nonsym_runs += directed
                try:
                    est = estimate_entry(f, A, k, l, 80, symmetric=not directed, seed=idx)
                except LanczosBreakdown:
                    breakdowns += 1
                    continue
                err = abs(est - F[k, l]) / max(1.0, abs(F[k, l]))
                worst = max(worst, err)
                fails += err > KRYLOV_TOL
    rate = breakdowns / max(nonsym_runs, 1)
    elapsed = time.perf_counter() - t0
    ok = fails == 0 and rate < MAX_BREAKDOWN_RATE
    report(7, ok, f"{runs} entries (n = 80 steps), {fails} beyond 1e-8 relative to max(1, |f|), "
                  f"max error {worst:.1e}, breakdowns {breakdowns}/{nonsym_runs} nonsymmetric",
           elapsed, 600)


def test_criterion_8_asymptotics():
    dp = abs(p_factor(1e6, 2, 1) - 2)
    dq = abs(q_factor(1e6, 2, 1) - 1)
    worst, checked = 0.0, 0
    for a in (0.5, 1.0, 2.0, 3.0):
        region = Disk(0, a)
        for delta in range(2, 16):
            closed = exp_bound(region, delta)
            if math.isinf(closed):
                continue
            generic, _ = minimize_tau_bound(Exp(), region, delta)
            worst = max(worst, generic / closed)
            checked += 1
    ok = dp < ASYMPTOTIC_TOL and dq < ASYMPTOTIC_TOL and worst <= GENERIC_FACTOR
    report(8, ok, f"|p - 2| = {dp:.1e}, |q - 1| = {dq:.1e} on Ellipse(a=2, b=1); generic/closed "
                  f"<= {worst:.3f} over {checked} (disk, delta) cases")


if __name__ == "__main__":
    import sys
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError:
            failed += 1
        except pytest.skip.Exception:
            pass
    sys.exit(1 if failed else 0)
