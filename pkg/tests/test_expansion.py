import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from oracles import adjacency, min_expansion_ratio
from rumorbench.errors import GraphDisconnected, InvalidParameters, NotRegular, SizeWindowEmpty
from rumorbench.expansion import (
    ExpansionParams,
    audit,
    audit_p1,
    audit_p2,
    audit_p3,
    deficient_count,
    edges_between,
    expansion_ratio,
    hypercube_level_set,
    mixing_check,
    outer_boundary,
    p1_window,
    spectral,
    tanner_bound,
    tanner_check,
)
from rumorbench.graph import (
    Graph,
    GraphSpec,
    complete_graph,
    cycle_graph,
    generate,
    hypercube_graph,
    kary_tree,
    path_graph,
    star_graph,
)


def test_params_validation():
    for bad in ({"C_alpha": 0}, {"C_delta": 1.0}, {"C_omega": -1}, {"C_beta_threshold": 0}):
        with pytest.raises(InvalidParameters):
            ExpansionParams(**bad)


def test_complete_10_exact_minimum():
    # with C_alpha = 1 the window C_alpha n/d = 10/9 < 3 is empty
    with pytest.raises(SizeWindowEmpty):
        audit_p1(complete_graph(10), ExpansionParams(C_alpha=1.0), "exact")
    rep = audit_p1(complete_graph(10), ExpansionParams(C_alpha=2.7), "exact")
    assert rep.passed
    assert rep.min_observed_ratio == pytest.approx(7 / 27)
    assert len(rep.witness) == 3


@pytest.mark.parametrize(
    "g",
    [complete_graph(8), cycle_graph(10), hypercube_graph(3), kary_tree(2, 3), path_graph(12)],
)
def test_exact_p1_matches_brute_force(g):
    params = ExpansionParams(C_alpha=g.n * 2)
    lo, hi = p1_window(g, params)
    assert hi <= g.n - 1
    rep = audit_p1(g, params, "exact")
    assert Fraction(rep.min_observed_ratio).limit_denominator(10**6) == min_expansion_ratio(adjacency(g), lo, hi)
    assert rep.min_observed_ratio == pytest.approx(expansion_ratio(g, rep.witness))
    assert nx.is_connected(nx.Graph(g.edges().tolist()).subgraph(rep.witness))


def test_sampled_never_below_exact():
    g = generate(GraphSpec.of("gnp", seed=3, n=16, p=0.35))
    params = ExpansionParams(C_alpha=4.0)
    exact = audit_p1(g, params, "exact")
    for seed in range(3):
        assert audit_p1(g, params, "sampled", 100, seed).min_observed_ratio >= exact.min_observed_ratio - 1e-12


def test_kary_tree_fails_with_subtree_witness():
    g = kary_tree(3, 3)
    rep = audit_p1(g, ExpansionParams(), "sampled", 200)
    assert rep.witness_kind == "bridge_side"
    assert not rep.passed
    assert rep.boundary_size == 1
    assert rep.boundary_size == len(outer_boundary(g, rep.witness))
    # the witness is a full subtree below one child of the root: 1 + 3 + 9 vertices
    assert len(rep.witness) == 13
    G = nx.Graph(g.edges().tolist())
    subtrees = []
    for c in (1, 2, 3):
        H = G.copy()
        H.remove_edge(0, c)
        subtrees.append(sorted(nx.node_connected_component(H, c)))
    assert sorted(rep.witness) in subtrees


def test_hypercube_level_set_witness():
    d = 8
    S = hypercube_level_set(d)
    assert len(S) == 8 + 28
    g = hypercube_graph(d)
    boundary = outer_boundary(g, S)
    # weights 0 and 3 border L1 ∪ L2
    assert len(boundary) == 1 + math.comb(8, 3)
    rep = audit_p1(g, ExpansionParams(C_alpha=8.0), "sampled", 50)
    assert rep.level_set_ratio == pytest.approx(57 / 288)
    assert rep.min_observed_ratio <= rep.level_set_ratio


def test_p1_requires_connected_and_small_exact():
    g = Graph.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
    with pytest.raises(GraphDisconnected):
        audit_p1(g, ExpansionParams(C_alpha=10), "exact")
    with pytest.raises(InvalidParameters):
        audit_p1(path_graph(25), ExpansionParams(C_alpha=30), "exact")


def test_p2_complete_no_deficient():
    g = complete_graph(12)
    for cd in (0.1, 0.5, 0.99):
        rep = audit_p2(g, ExpansionParams(C_delta=cd), 60, seed=1)
        assert rep.passed and rep.worst_deficient_count == 0


def test_p2_all_but_one():
    g = generate(GraphSpec.of("random_regular", seed=2, n=30, d=4))
    v = 7
    s = [u for u in range(30) if u != v]
    assert deficient_count(g, s, 1 / 6) == 0


def test_p2_star_leaves():
    g = star_graph(9)
    assert deficient_count(g, list(range(1, 10)), 0.5) == 0


def test_p3():
    assert audit_p3(generate(GraphSpec.of("random_regular", seed=0, n=50, d=4))).passed
    assert audit_p3(hypercube_graph(10)).passed
    rep = audit_p3(star_graph(99))
    assert not rep.passed and rep.max_ratio == pytest.approx(99 / 1.98)


def test_full_audit_complete_passes():
    for n in (6, 10, 14):
        rep = audit(complete_graph(n), ExpansionParams(C_alpha=(n - 1) / 2))
        assert rep.p1.mode == "exact"
        assert rep.passed


def test_report_json_keys():
    d = audit(complete_graph(8), ExpansionParams(C_alpha=4)).to_dict()
    assert {"min_observed_ratio", "witness", "mode", "pass"} <= set(d["p1"])
    assert {"max_deficient_excess", "witness", "pass"} <= set(d["p2"])
    assert {"delta", "d", "delta_ratio", "max_ratio", "pass"} <= set(d["p3"])
    assert d["p1"]["witness"] == sorted(d["p1"]["witness"])


@pytest.mark.parametrize("n", [8, 64])
def test_spectral_complete(n):
    rep = spectral(complete_graph(n))
    assert abs(rep.lambda1 - (n - 1)) <= 1e-8
    assert abs(rep.lam - 1) <= 1e-8
    assert rep.ramanujan_pass


def test_spectral_cycle_and_hypercube():
    assert abs(spectral(cycle_graph(5)).lam - (1 + math.sqrt(5)) / 2) <= 1e-8
    rep = spectral(hypercube_graph(4))
    assert abs(rep.lambda1 - 4) <= 1e-8
    assert abs(rep.lam - 4) <= 1e-8  # bipartite: λ_n = -d
    assert abs(rep.lambda2 - 2) <= 1e-8


def test_spectral_matches_dense_oracle_and_trace_identities():
    g = generate(GraphSpec.of("random_regular", seed=5, n=120, d=6))
    rep = spectral(g)
    ev = np.linalg.eigvalsh(g.csr.toarray().astype(float))
    assert rep.lambda1 == pytest.approx(ev[-1], abs=1e-8)
    assert rep.lam == pytest.approx(max(abs(ev[-2]), abs(ev[0])), abs=1e-8)
    s1, s2 = rep.trace_identities()
    assert abs(s1) <= 1e-6 * g.n
    assert abs(s2 - 2 * g.edge_count) <= 1e-6 * g.n * 6
    assert rep.max_residual <= 1e-8 * 10
    assert rep.lam < rep.lambda1


def test_spectral_iterative_path_flagged():
    g = generate(GraphSpec.of("random_regular", seed=1, n=300, d=4))
    approx = spectral(g, dense_limit=100)
    exact = spectral(g)
    assert approx.approximate and not exact.approximate
    assert approx.lam == pytest.approx(exact.lam, abs=1e-6)


def test_spectral_irregular_has_no_ramanujan_verdict():
    assert spectral(path_graph(6)).ramanujan_pass is None


def test_edges_between_counts_ordered_pairs():
    g = complete_graph(10)
    assert edges_between(g, range(10), range(10)) == 90
    assert edges_between(g, [], range(10)) == 0


def test_mixing_examples():
    g = complete_graph(10)
    lam = spectral(g).lam
    rep = mixing_check(g, lam, pairs=[(list(range(10)), list(range(10))), ([], [1, 2])])
    assert rep.violations == 0
    assert rep.max_violation <= 1e-9
    with pytest.raises(NotRegular):
        mixing_check(path_graph(5), 1.0)


def test_mixing_random_regular():
    g = generate(GraphSpec.of("random_regular", seed=0, n=500, d=8))
    rep = mixing_check(g, spectral(g).lam, 100, seed=4)
    assert rep.violations == 0 and rep.pairs == 100


def test_tanner():
    g = generate(GraphSpec.of("random_regular", seed=0, n=300, d=6))
    lam = spectral(g).lam
    rep = tanner_check(g, lam, 100, seed=1)
    assert rep.violations == 0
    assert tanner_bound(6, lam, 300, 300) == pytest.approx(300)
