import json
import math

import numpy as np
import pytest
import scipy.sparse as sp

from netstab.experiments import (ExperimentConfig, ExperimentError, build_two_cycles,
                                 choose_region, intersection_similarity, isim_curve,
                                 least_central_nodes, parse_delta_text, parse_recipe,
                                 ranking, rho_count_curve, rho_curve, rho_metric,
                                 run_experiment, two_cycles_perturbation)
from netstab.functions import Exp, Resolvent
from netstab.graph import (Graph, MatrixKind, all_pairs_distances, apply_delta,
                           from_edges, serialize_edge_list)
from netstab.oracle import dense_expm
from netstab.spectral import Disk, Segment


def test_two_cycles_structure():
    g = build_two_cycles()
    assert g.n_nodes == 222
    assert g.n_edges == 2 * 111 * 2 + 1
    assert g.has_edge(110, 111) and not g.has_edge(111, 110)
    assert g.node_labels[110] == 111 and g.node_labels[111] == 112


def test_two_cycles_uniform_centrality():
    g = build_two_cycles()
    E = dense_expm(g.adjacency.toarray())
    left, right = np.diag(E)[:111], np.diag(E)[111:]
    assert np.ptp(left) <= 1e-12 * left.max()
    assert np.ptp(right) <= 1e-12 * right.max()
    assert abs(left[0] - right[0]) <= 1e-12 * left[0]


def test_two_cycles_bridge_increases_centrality():
    g = build_two_cycles()
    gt = apply_delta(g, two_cycles_perturbation())
    assert dense_expm(gt.adjacency.toarray())[110, 110] > dense_expm(g.adjacency.toarray())[110, 110]


def test_least_central_star():
    star = from_edges(6, [(0, i) for i in range(1, 6)], directed=False)
    assert least_central_nodes(star, Exp(), "plain", 1) == [1]
    assert least_central_nodes(star, Exp(), "plain", 6) == list(range(6))
    with pytest.raises(ValueError):
        least_central_nodes(star, Exp(), "plain", 7)


def test_least_central_deterministic_and_lanczos_path():
    rng = np.random.default_rng(0)
    M = (rng.random((60, 60)) < 0.08).astype(float)
    M = np.triu(M, 1)
    g = Graph(sp.csr_matrix(M + M.T), directed=False)
    dense = least_central_nodes(g, Exp(), "plain", 5)
    assert dense == least_central_nodes(g, Exp(), "plain", 5)
    assert least_central_nodes(g, Exp(), "plain", 5, steps=60, cap=10) == dense


def test_intersection_similarity():
    assert intersection_similarity(list("abcd"), list("abcd"), 4) == 1.0
    assert intersection_similarity(list("abc"), list("xyz"), 3) == 0.0
    assert intersection_similarity(list("abc"), list("bac"), 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        intersection_similarity([1], [1], 0)
    with pytest.raises(ValueError):
        intersection_similarity([1], [1], 2)
    curve = isim_curve(list("abcde"), list("bacde"))
    for k in range(1, 6):
        assert curve[k - 1] == pytest.approx(intersection_similarity(list("abcde"), list("bacde"), k))


def test_ranking_ties():
    assert ranking([1.0, 3.0, 3.0, 0.0]) == [1, 2, 0, 3]


def random_connected(n, seed, extra=0.02):
    rng = np.random.default_rng(seed)
    M = (rng.random((n, n)) < extra).astype(float)
    perm = rng.permutation(n)
    M[perm[:-1], perm[1:]] = 1
    np.fill_diagonal(M, 0)
    M = np.triu(M, 1) + np.triu(M, 1).T + np.tril(M, -1) + np.tril(M, -1).T
    M = (M > 0).astype(float)
    return Graph(sp.csr_matrix(M), directed=False)


@pytest.mark.parametrize("seed", range(3))
def test_rho_properties(seed):
    g = random_connected(80, seed)
    D = all_pairs_distances(g)
    diam = int(D.max())
    ns = list(range(1, diam + 2))
    curve = rho_curve(g, ns)
    vals = [curve[n] for n in ns]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert curve[diam] == 0.0
    for n in (1, max(diam // 2, 1), diam):
        assert rho_metric(g, n) == curve[n]


def test_rho_directed_two_cycles():
    g = build_two_cycles()
    counts = rho_count_curve(g, [111, 112])
    assert counts[111][0] == 0 and counts[112][0] == 0
    # connected ordered pairs: all pairs within each cycle plus left -> right
    assert counts[111][1] == 2 * 111 * 110 + 111 * 111


def test_rho_one_step():
    g = from_edges(3, [(0, 1), (1, 2)], directed=False)
    # one step: d = 1 recovered only when true distance is exactly 1
    assert rho_metric(g, 1) == pytest.approx(2 / 6)
    with pytest.raises(ValueError):
        rho_metric(g, 0)


def test_parse_recipe():
    assert parse_recipe("clique:5") == ("clique", (5,))
    assert parse_recipe("reweight:5:5") == ("reweight", (5, 5.0))
    assert parse_recipe("delta:/tmp/a:b") == ("delta", ("/tmp/a:b",))
    assert parse_recipe("none") == ("none", ())
    for bad in ("clique:0", "reweight:3:0", "reweight:3", "foo", "clique"):
        with pytest.raises(ValueError):
            parse_recipe(bad)


def test_parse_delta_text():
    g = from_edges(3, [(0, 1)], directed=False)
    d = parse_delta_text("# changes\n1 2 add 2\n1 0 remove\n", g, base_index=0)
    assert d.is_symmetric() and len(d) == 4
    with pytest.raises(ValueError):
        parse_delta_text("1 x add\n", g)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig()
    with pytest.raises(ValueError):
        ExperimentConfig(two_cycles=True, model="10")
    with pytest.raises(ValueError):
        ExperimentConfig(two_cycles=True, perturb="clique:0")
    cfg = ExperimentConfig(two_cycles=True, function="resolvent:0.25", kind="transition")
    assert isinstance(cfg.function, Resolvent) and cfg.kind is MatrixKind.TRANSITION


@pytest.mark.parametrize("f", [Exp(), Resolvent(1 / 3)])
def test_two_cycles_experiment(f, tmp_path):
    res = run_experiment(ExperimentConfig(two_cycles=True, function=f, out=str(tmp_path / "tc")))
    rows = res.rows
    assert sorted(r["node"] for r in rows) == list(range(222))
    assert all(a["dist_k_S"] <= b["dist_k_S"] for a, b in zip(rows, rows[1:]))
    assert res.summary["max_violation"] <= 1e-12
    assert all(r["actual"] <= r["bound"] + 1e-12 for r in rows)
    summary = json.loads((tmp_path / "tc_summary.json").read_text())
    assert summary["n_changes"] == 1 and len(summary["isim"]) == 222
    header = (tmp_path / "tc.csv").read_text().splitlines()[0]
    assert header == "rank,node,label,dist_k_S,dist_T_k,delta_eff,actual,bound"


def test_empty_perturbation():
    res = run_experiment(ExperimentConfig(two_cycles=True, perturb="none"))
    assert all(r["actual"] == 0.0 and r["bound"] == 0.0 for r in res.rows)
    assert np.all(np.array(res.summary["isim"]) == 1.0)


def test_clique_experiment_normalized(tmp_path):
    g = random_connected(60, 4, extra=0.05)
    path = tmp_path / "g.edges"
    path.write_text(serialize_edge_list(g))
    res = run_experiment(ExperimentConfig(graph_path=str(path), kind="normalized",
                                          perturb="clique:5"))
    assert res.summary["region"] == repr(Segment(0.0, 1.0))
    assert res.summary["failed_pairs"] == 5
    assert res.summary["max_violation"] <= 1e-12


def test_reweight_experiment_defaults_to_disk(tmp_path):
    g = random_connected(50, 5, extra=0.005)
    g = Graph(g.adjacency.multiply(1.2).tocsr(), directed=False)
    path = tmp_path / "g.edges"
    path.write_text(serialize_edge_list(g))
    res = run_experiment(ExperimentConfig(graph_path=str(path), perturb="reweight:3:5"))
    assert "Disk" in res.summary["region"]
    seg = run_experiment(ExperimentConfig(graph_path=str(path), perturb="reweight:3:5",
                                          region="segment"))
    assert "Segment" in seg.summary["region"]
    assert sum(math.isfinite(r["bound"]) for r in res.rows) >= 10
    assert res.summary["max_violation"] <= 1e-12
    res_b = run_experiment(ExperimentConfig(graph_path=str(path), perturb="reweight:3:5",
                                            include_boundary=True))
    assert res_b.summary["n_changes"] > res.summary["n_changes"]


def test_choose_region_modes():
    g = random_connected(30, 6)
    assert isinstance(choose_region(g, g, MatrixKind.PLAIN), Segment)
    assert isinstance(choose_region(g, g, MatrixKind.PLAIN, "disk"), Disk)
    d = build_two_cycles()
    with pytest.raises(ValueError):
        choose_region(d, d, MatrixKind.PLAIN, "segment")


def test_stage_tagged_errors(tmp_path):
    with pytest.raises(ExperimentError) as exc:
        run_experiment(ExperimentConfig(graph_path=str(tmp_path / "missing.edges")))
    assert exc.value.stage == "load"
    with pytest.raises(ExperimentError) as exc:
        run_experiment(ExperimentConfig(two_cycles=True, kind="normalized"))
    assert exc.value.stage == "region"
    out = tmp_path / "x"
    with pytest.raises(ExperimentError):
        run_experiment(ExperimentConfig(two_cycles=True, function=Resolvent(1.0), out=str(out)))
    assert not (tmp_path / "x.csv").exists()


def test_sampled_actual_above_cap():
    res = run_experiment(ExperimentConfig(two_cycles=True, steps=40, dense_cap=100,
                                          sample_pairs=20))
    assert res.summary["actual_sampled"]
    assert sum(math.isfinite(r["actual"]) for r in res.rows) == 20
    assert res.summary["isim"] == []
    assert res.summary["max_violation"] <= 1e-12
