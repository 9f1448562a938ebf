import numpy as np
import pytest
from hypothesis import given, strategies as st

from bandseg.core import ScoreModel
from bandseg.graph import Graph
from bandseg.heuristic import DenseEngine, borders_of_order, is_monotonic_order
from bandseg.sparse import (
    FrontierSet, SparseEngine, build_lattice, dominance_coords, encapsulated_nonedges,
    expand_order, frontier_points, graph_lattice, graph_nonedges, sparse_find_order,
    sparse_heuristic_borders,
)
from oracles import ReferenceEdgeHybrid, brute_lattice, run_reference_hybrid


def random_graph(rng, n, p=None):
    p = rng.uniform(0.1, 0.9) if p is None else p
    a = np.triu(rng.random((n, n)) < p, 1)
    u, v = np.nonzero(a)
    return Graph(n, u, v)


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(2, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    u = [p[0] for p in chosen]
    v = [p[1] for p in chosen]
    return Graph(n, u, v)


def test_lattice_example():
    lat = build_lattice([(1, 3), (2, 3), (2, 4)])
    assert lat.edge_set() == {(0, 1), (1, 2)}
    assert brute_lattice([(1, 3), (2, 3), (2, 4)]) == {(0, 1), (1, 2)}


def test_lattice_single_and_errors():
    assert build_lattice([(0, 5)]).n_edges == 0
    with pytest.raises(ValueError):
        build_lattice([(1, 1), (1, 1)])
    with pytest.raises(ValueError):
        build_lattice([(-1, 0)])


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), unique=True, max_size=50))
def test_lattice_matches_definition(points):
    lat = build_lattice(points, n_cols=10)
    assert lat.edge_set() == brute_lattice(points)


@given(graphs())
def test_graph_lattice_matches_definition(g):
    lat = graph_lattice(g)
    a, b = dominance_coords(g)
    assert lat.edge_set() == brute_lattice(list(zip(a, b)))
    # acyclic: a full traversal exists
    assert len(sparse_find_order(lat, np.zeros(g.n_edges))) == g.n_edges


def test_find_order_examples():
    chain = build_lattice([(0, 0), (1, 1), (2, 2)])
    assert list(sparse_find_order(chain, [0.0, 5.0, 9.0])) == [0, 1, 2]
    pair = build_lattice([(0, 1), (1, 0)])
    assert list(sparse_find_order(pair, [5.0, 7.0])) == [1, 0]
    with pytest.raises(ValueError):
        sparse_find_order(pair, [np.nan, 0.0])


@given(graphs(), st.integers(0, 10_000))
def test_induced_entry_order_is_monotonic(g, seed):
    rng = np.random.default_rng(seed)
    lat = graph_lattice(g)
    seq = sparse_find_order(lat, rng.random(g.n_edges))
    ij = expand_order(seq, g)
    grid = g.to_grid()
    flat = grid.index[ij[:, 0], ij[:, 1]]
    assert sorted(flat.tolist()) == list(range(grid.size))
    assert is_monotonic_order(flat, grid)


def test_nonedge_examples():
    g = Graph(4, [0], [1])
    assert list(graph_nonedges([0], g)) == [0]
    g = Graph(4, [0], [2])
    assert list(graph_nonedges([0], g)) == [2]


@given(graphs(), st.integers(0, 10_000))
def test_nonedge_conservation(g, seed):
    rng = np.random.default_rng(seed)
    seq = sparse_find_order(graph_lattice(g), rng.random(g.n_edges))
    counts = graph_nonedges(seq, g)
    if g.n_edges:
        a, b = dominance_coords(g)
        # area of the smallest corner holding every edge
        ends = np.full(g.n, -1)
        np.maximum.at(ends, a, b)
        ends = np.maximum.accumulate(ends[::-1])[::-1]
        rows = np.arange(g.n)
        area = np.maximum(0, ends - (g.n - rows) + 1).sum()
        assert counts.sum() + g.n_edges == area


def test_nonmonotonic_sequence_rejected():
    g = Graph(4, [0, 1], [2, 2])
    a, b = dominance_coords(g)
    # edge 0 = (1,3) encloses edge 1 = (2,3) and cannot come first
    with pytest.raises(Exception):
        encapsulated_nonedges([0, 1], a, b, 4, 4)


def test_frontier_set_matches_kernel():
    rng = np.random.default_rng(0)
    for _ in range(30):
        g = random_graph(rng, int(rng.integers(2, 15)))
        if not g.n_edges:
            continue
        a, b = dominance_coords(g)
        seq = sparse_find_order(graph_lattice(g), rng.random(g.n_edges))
        fs = FrontierSet(s0=g.n)
        slow = [fs.add(int(a[e]), int(b[e])) - 1 for e in seq]
        assert slow == list(graph_nonedges(seq, g))
        pts = list(fs)
        assert all(r1 < r2 and c1 > c2 for (r1, c1), (r2, c2) in zip(pts, pts[1:]))


def test_empty_and_complete_graphs():
    res = sparse_heuristic_borders(Graph(6), seed=0)
    assert len(res.chain) == 1 and res.chain.densities[0] == 0.0
    assert res.chain.counts[0] == 15
    n = 6
    u, v = np.triu_indices(n, 1)
    res = sparse_heuristic_borders(Graph(n, u, v), seed=0)
    assert len(res.chain) == 1 and res.chain.densities[0] == 1.0


def test_zero_weights_are_nonedges():
    g = Graph(4, [0, 1, 2], [1, 2, 3], [1.0, 0.0, 2.0])
    assert g.n_edges == 2
    res = sparse_heuristic_borders(g, seed=0)
    assert res.chain.counts.sum() == 6 and res.chain.sums.sum() == 3.0


@given(graphs(max_n=10), st.integers(0, 1000))
def test_sparse_matches_reference_iteration(g, seed):
    if not g.n_edges:
        return
    ref = ReferenceEdgeHybrid(g.n, list(zip(g.u, g.v)))
    trace, conv = run_reference_hybrid(ref, seed, stall_window=5)
    got = []
    res = sparse_heuristic_borders(
        g, seed=seed, stall_window=5,
        callback=lambda kind, ch: got.append((kind, tuple(ch.edge_labels), tuple(ch.counts))))
    assert [(k, c[0], c[1]) for k, c in trace] == got
    assert res.converged == conv


@given(graphs(), st.integers(0, 1000))
def test_dense_conversion_matches_entry_pooling(g, seed):
    rng = np.random.default_rng(seed)
    eng = SparseEngine(g)
    seq = sparse_find_order(eng.lattice, rng.random(g.n_edges))
    chain, _ = eng.borders(seq)
    grid = g.to_grid()
    ij = expand_order(seq, g)
    dense = borders_of_order(grid.index[ij[:, 0], ij[:, 1]], grid)
    assert chain.to_border_chain(g) == dense
    assert np.array_equal(chain.counts, dense.counts)


@given(graphs(), st.integers(0, 1000))
def test_border_frontier_points_are_edges(g, seed):
    res = sparse_heuristic_borders(g, seed=seed, stall_window=3)
    edges = set(zip(g.u.tolist(), g.v.tolist()))
    for k in range(1, len(res.chain)):
        for p in frontier_points(res.chain.staircase(g, k), g.n):
            assert p in edges


def test_vertex_order_changes_coordinates_only():
    rng = np.random.default_rng(7)
    g = random_graph(rng, 10, 0.4)
    order = rng.permutation(10)
    a = sparse_heuristic_borders(g, order=order, seed=1)
    b = sparse_heuristic_borders(g.permuted(order), seed=1)
    assert np.array_equal(a.chain.counts, b.chain.counts)
    assert a.score == b.score


def test_sparse_score_never_beats_exact():
    from bandseg.exact import exact_borders

    rng = np.random.default_rng(9)
    m = ScoreModel.bernoulli()
    for _ in range(20):
        g = random_graph(rng, 12)
        res = sparse_heuristic_borders(g, seed=0)
        assert res.score <= exact_borders(g.to_grid()).score(m) + 1e-9
        assert res.chain.is_strictly_decreasing()
