"""Invariants checked on hypothesis-generated graphs, lists, offsets and seeds."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import adjacency, diameter
from rumorbench.engine import (
    FULLY_RANDOM,
    LITERAL,
    ROLLING,
    Offsets,
    RunConfig,
    check_quasirandom_bounds,
    literal_to_rolling_offsets,
    make_lists,
    reach_matrix,
    simulate,
    simulate_batch,
)
from rumorbench.expansion import mixing_check, spectral, tanner_check
from rumorbench.graph import Graph, GraphSpec, generate, is_connected
from rumorbench.rng import counter_bits, counter_index

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def connected_graphs(draw, max_n=24):
    n = draw(st.integers(2, max_n))
    # random spanning tree plus extra edges keeps every sample connected
    parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
    edges = {(p, v) for v, p in zip(range(1, n), parents)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return Graph.from_edges(n, sorted(edges))


@st.composite
def schedules(draw):
    g = draw(connected_graphs())
    lists = make_lists(g, "random", draw(st.integers(0, 2**32)))
    idx = np.array([draw(st.integers(0, max(int(d), 1) - 1)) for d in g.degrees])
    start = draw(st.integers(0, g.n - 1))
    return g, lists, Offsets(idx), start


@SETTINGS
@given(connected_graphs())
def test_graph_is_simple(g):
    adj = adjacency(g)
    assert sum(map(len, adj)) == 2 * g.edge_count
    for v, a in enumerate(adj):
        assert a == sorted(set(a)) and v not in a
        assert all(v in adj[u] for u in a)
    assert g.metrics.diameter == diameter(adj)


@SETTINGS
@given(schedules())
def test_quasirandom_deterministic_bounds(sched):
    g, lists, off, s = sched
    tr = simulate(g, lists, RunConfig(ROLLING, s, 0, 4 * g.n), off)
    m = g.metrics
    assert tr.broadcast_time <= 2 * g.n - 3 or g.n == 2 and tr.broadcast_time == 1
    assert tr.broadcast_time <= m.max_degree * m.diameter


@SETTINGS
@given(schedules(), st.sampled_from([FULLY_RANDOM, ROLLING, LITERAL]), st.integers(0, 2**40))
def test_growth_is_monotone_and_at_most_doubling(sched, model, seed):
    g, lists, _, s = sched
    counts = simulate(g, lists, RunConfig(model, s, seed, 8 * g.n)).informed_counts()
    assert np.all(np.diff(counts) >= 0)
    assert np.all(counts[1:] <= 2 * counts[:-1])
    assert counts[-1] <= g.n


@SETTINGS
@given(schedules())
def test_reach_forward_duality(sched):
    g, lists, off, s = sched
    tmax = 2 * g.n
    tr = simulate(g, lists, RunConfig(ROLLING, s, 0, tmax), off)
    for t in range(1, tmax + 1):
        reach = reach_matrix(g, lists, off, 1, t)
        informed = tr.informed_at <= t
        predicted = reach[s].copy()
        predicted[s] = True
        assert np.array_equal(informed, predicted)


@SETTINGS
@given(connected_graphs(), st.integers(0, 2**40))
def test_literal_rolling_coupling(g, seed):
    lists = make_lists(g, "random", seed)
    lit = simulate(g, lists, RunConfig(LITERAL, 0, seed, 4 * g.n))
    roll = simulate(g, lists, RunConfig(ROLLING, 0, seed, 4 * g.n), literal_to_rolling_offsets(g, lit))
    assert np.array_equal(lit.informed_at, roll.informed_at)


@SETTINGS
@given(connected_graphs(max_n=16), st.sampled_from([FULLY_RANDOM, ROLLING, LITERAL]),
       st.lists(st.integers(0, 2**40), min_size=1, max_size=6))
def test_batch_equals_single(g, model, seeds):
    res = simulate_batch(g, None, model, seeds, 0)
    if model != FULLY_RANDOM:
        check_quasirandom_bounds(g, res.informed_at, res.rounds_run, g.metrics.diameter, np.zeros(len(seeds), int))
    for b, s in enumerate(seeds):
        assert np.array_equal(res.informed_at[b], simulate(g, None, RunConfig(model, 0, s)).informed_at)


@SETTINGS
@given(st.integers(0, 2**63), st.lists(st.integers(0, 10**6), min_size=1, max_size=20), st.integers(0, 1000))
def test_counter_rng_is_order_independent(key, verts, counter):
    v = np.array(verts)
    whole = counter_bits(key, v, counter, 2)
    perm = np.argsort(-v, kind="stable")
    assert np.array_equal(counter_bits(key, v[perm], counter, 2), whole[perm])
    assert all(counter_bits(key, x, counter, 2)[0] == whole[i] for i, x in enumerate(verts))
    idx = counter_index(key, v, counter, 7, 2)
    assert np.all((idx >= 0) & (idx < 7))


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 30), st.integers(2, 6), st.integers(0, 2**32))
def test_mixing_and_tanner_never_violated(half, d, seed):
    n = 2 * half  # even n admits every degree
    g = generate(GraphSpec.of("random_regular", seed=seed, n=n, d=d))
    lam = spectral(g).lam
    assert mixing_check(g, lam, 20, seed).violations == 0
    if is_connected(g):
        assert tanner_check(g, lam, 20, seed).violations == 0


@settings(max_examples=20, deadline=None)
@given(connected_graphs(max_n=30))
def test_spectral_trace_identities(g):
    rep = spectral(g)
    s1, s2 = rep.trace_identities()
    assert abs(s1) <= 1e-6 * g.n
    assert abs(s2 - 2 * g.edge_count) <= 1e-6 * g.n * g.metrics.max_degree
    assert rep.lam <= rep.lambda1 + 1e-9
