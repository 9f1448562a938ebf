"""Heuristic border discovery that only orders the edges of a sparse graph.

Entries of the upper triangle are mapped to *dominance coordinates*
``(a, b) = (n - 1 - i, j)`` so that moving toward the diagonal decreases a
coordinate and a corner is a down-closed set.  Row ``a`` of the domain starts
at column ``max(0, n - a)``.

A corner whose extreme points are all edges is the down-closure of those
edges, so it is enough to order edges consistently with dominance.  The
dominance order is represented by its cover relation (the edge lattice), and
the non-edges swallowed when a new edge enters the corner are counted with a
frontier structure.  The generic functions also accept plain rectangle
coordinates (row start 0).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._kernels import traverse_dag, lattice_edges, pool_prefixes, swallowed_counts
from .core import (
    BandsegError,
    BorderChain,
    ScoreModel,
    SegmentStats,
    Staircase,
    compare_density,
    segment_scores,
)
from .graph import Graph, positions
from .heuristic import HeuristicResult, run_hybrid


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EdgeLattice:
    """Cover relation of coordinate dominance among a set of points.

    ``src[k] -> dst[k]`` means point ``src[k]`` is dominated by ``dst[k]``
    with no third point in between.  ``indptr``/``children`` is the same
    relation in CSR form and ``indegree`` counts parents.
    """

    a: np.ndarray
    b: np.ndarray
    src: np.ndarray
    dst: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.a.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    @cached_property
    def csr(self):
        order = np.argsort(self.src, kind="stable")
        children = self.dst[order]
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.n_nodes), out=indptr[1:])
        indegree = np.bincount(self.dst, minlength=self.n_nodes).astype(np.int64)
        return indptr, children.astype(np.int64), indegree

    def edge_set(self) -> set:
        return set(zip(self.src.tolist(), self.dst.tolist()))


def build_lattice(points, n_cols: int | None = None) -> EdgeLattice:
    """Edge lattice of distinct non-negative integer points ``(a, b)``.

    Node ``k`` of the lattice is ``points[k]``.
    """
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    if pts.size and pts.min() < 0:
        raise ValueError("lattice coordinates must be non-negative")
    a, b = pts[:, 0].copy(), pts[:, 1].copy()
    if n_cols is None:
        n_cols = int(b.max()) + 1 if b.size else 1
    srt = np.lexsort((b, a))
    sa, sb = a[srt], b[srt]
    if sa.size > 1 and np.any((sa[1:] == sa[:-1]) & (sb[1:] == sb[:-1])):
        raise ValueError("points must be distinct")
    src, dst = lattice_edges(sa, sb, n_cols)
    return EdgeLattice(a, b, srt[src], srt[dst])


def dominance_coords(graph: Graph, order=None) -> tuple[np.ndarray, np.ndarray]:
    """Dominance coordinates of the edges of ``graph`` under a vertex order."""
    n = graph.n
    pos = np.arange(n) if order is None else positions(order, n)
    pu, pv = pos[graph.u], pos[graph.v]
    i, j = np.minimum(pu, pv), np.maximum(pu, pv)
    return (n - 1 - i).astype(np.int64), j.astype(np.int64)


def graph_lattice(graph: Graph, order=None) -> EdgeLattice:
    """Edge lattice of a graph whose vertices are arranged by ``order``.

    Lattice node ``k`` is edge ``k`` of ``graph``.
    """
    a, b = dominance_coords(graph, order)
    return build_lattice(np.stack([a, b], axis=1), n_cols=max(graph.n, 1))


# ---------------------------------------------------------------------------
# frontier
# ---------------------------------------------------------------------------


class FrontierSet:
    """Extreme points of a corner, one per occupied row, in dominance coordinates.

    A corner is the down-closure of its frontier; the points have increasing
    rows and decreasing columns.  Rows are kept sorted so that predecessor
    and successor lookups are logarithmic.
    """

    def __init__(self, s0: int = 0):
        self.s0 = s0
        self.rows: list[int] = []
        self.cols: dict[int, int] = {}

    def __iter__(self):
        return ((r, self.cols[r]) for r in self.rows)

    def __len__(self):
        return len(self.rows)

    def covered_end(self, a: int) -> int:
        """Largest covered column in row ``a`` (-1 if none)."""
        k = bisect.bisect_left(self.rows, a)
        return self.cols[self.rows[k]] if k < len(self.rows) else -1

    def add(self, a: int, b: int) -> int:
        """Extend the corner by the closure of (a, b); returns newly covered cells."""
        new = 0
        for r in range(a + 1):
            start = max(0, self.s0 - r)
            new += max(0, b - max(self.covered_end(r), start - 1))
        if self.covered_end(a) >= b:
            return new
        # drop frontier points dominated by (a, b)
        k = bisect.bisect_right(self.rows, a)
        while k > 0 and self.cols[self.rows[k - 1]] <= b:
            del self.cols[self.rows.pop(k - 1)]
            k -= 1
        bisect.insort(self.rows, a)
        self.cols[a] = b
        return new

    @classmethod
    def of_ends(cls, ends: np.ndarray, s0: int = 0) -> "FrontierSet":
        """Frontier of the corner with inclusive end column ``ends[a]`` per row."""
        f = cls(s0)
        m = len(ends)
        for a in range(m):
            e = ends[a]
            start = max(0, s0 - a)
            if e >= start and (a + 1 >= m or ends[a + 1] < e):
                f.rows.append(a)
                f.cols[a] = int(e)
        return f


def frontier_points(staircase: Staircase, n: int) -> list[tuple[int, int]]:
    """Frontier of a triangle-mode staircase as (i, j) vertex pairs."""
    w = np.asarray(staircase.widths)
    i = np.arange(n)
    last = i + w  # inclusive last column, equal to i when the row is empty
    ends = np.where(w > 0, last, -1)[::-1]  # indexed by a = n - 1 - i
    out = []
    for a, b in FrontierSet.of_ends(ends, s0=n):
        out.append((n - 1 - a, b))
    return out


# ---------------------------------------------------------------------------
# ordering edges and counting swallowed non-edges
# ---------------------------------------------------------------------------


def sparse_find_order(lattice: EdgeLattice, weights, tiebreak=None) -> np.ndarray:
    """Greedy largest-weight-first topological order of the lattice nodes."""
    k1 = np.ascontiguousarray(weights, dtype=float)
    k2 = np.zeros_like(k1) if tiebreak is None else np.ascontiguousarray(tiebreak, dtype=float)
    if k1.shape != (lattice.n_nodes,) or k2.shape != k1.shape:
        raise ValueError("one weight per lattice node is required")
    if np.any(np.isnan(k1)) or np.any(np.isnan(k2)):
        raise ValueError("weights contain NaN and cannot be ordered")
    order = traverse_dag(*lattice.csr, k1, k2)
    if order.shape[0] != lattice.n_nodes:
        raise BandsegError("internal error: edge lattice has a cycle")
    return order


def encapsulated_nonedges(edge_sequence, a, b, n_rows: int, s0: int) -> np.ndarray:
    """Non-edges newly swallowed as each edge of the sequence joins the corner.

    ``a``/``b`` are dominance coordinates indexed by edge id and row ``r``
    of the domain starts at ``max(0, s0 - r)``.  The sequence must be a
    topological order of the dominance relation.
    """
    seq = np.asarray(edge_sequence, dtype=np.int64)
    out = swallowed_counts(seq, np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64),
                           n_rows, s0)
    if np.any(out < 0):
        raise BandsegError("edge sequence is not monotonic")
    return out


def graph_nonedges(edge_sequence, graph: Graph, order=None) -> np.ndarray:
    """:func:`encapsulated_nonedges` for a graph under a vertex order."""
    a, b = dominance_coords(graph, order)
    return encapsulated_nonedges(edge_sequence, a, b, graph.n, graph.n)


def expand_order(edge_sequence, graph: Graph, order=None) -> np.ndarray:
    """Full entry order (as (i, j) pairs) induced by an edge sequence.

    Cells swallowed together with an edge come before it, closest to the
    diagonal first; the cells never swallowed by any edge come last.
    """
    n = graph.n
    a, b = dominance_coords(graph, order)
    covered = np.full(n, -1, dtype=np.int64)  # inclusive covered end per row a
    rows = np.arange(n)
    start = np.maximum(0, n - rows)
    out = []

    def take(lim_a, lim_b):
        cells = []
        for r in range(min(lim_a, n - 1) + 1):
            lo = max(start[r], covered[r] + 1)
            if lo <= lim_b:
                cells.extend((r, c) for c in range(lo, lim_b + 1))
                covered[r] = lim_b
        cells.sort(key=lambda rc: (rc[0] + rc[1], rc[0]))
        return cells

    for e in np.asarray(edge_sequence, dtype=np.int64):
        out.extend(take(a[e], b[e]))
    out.extend(take(n - 1, n - 1))
    ij = np.array([(n - 1 - r, c) for r, c in out], dtype=np.int64).reshape(-1, 2)
    return ij


# ---------------------------------------------------------------------------
# chains over edges
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseChain:
    """Borders of an edge sequence.

    ``edge_labels[e]`` is the segment holding edge ``e``; segment statistics
    include the swallowed non-edges.  The last segment may contain only
    non-edges (the cells no edge reaches).
    """

    n: int
    edge_labels: np.ndarray
    counts: np.ndarray
    sums: np.ndarray
    sumsqs: np.ndarray

    def __len__(self):
        return int(self.counts.shape[0])

    def __eq__(self, other):
        if not isinstance(other, SparseChain):
            return NotImplemented
        return len(self) == len(other) and np.array_equal(self.edge_labels, other.edge_labels)

    __hash__ = None

    def segment(self, k: int) -> SegmentStats:
        return SegmentStats(int(self.counts[k]), float(self.sums[k]), float(self.sumsqs[k]))

    @property
    def segments(self):
        return [self.segment(k) for k in range(len(self))]

    @property
    def densities(self) -> np.ndarray:
        return self.sums / self.counts

    def score(self, model: ScoreModel) -> float:
        return float(segment_scores(self.counts, self.sums, self.sumsqs, model).sum())

    def progress_vector(self):
        sizes = np.cumsum(self.counts)
        return [(self.segment(k), int(sizes[k])) for k in range(len(self))]

    def is_strictly_decreasing(self) -> bool:
        segs = self.segments
        return all(compare_density(x, y) > 0 for x, y in zip(segs, segs[1:]))

    def corner_ends(self, graph: Graph, k: int, order=None) -> np.ndarray:
        """Inclusive last column of corner ``U_k`` for every vertex row ``i``.

        Rows with nothing covered get ``i`` (the diagonal).
        """
        n = self.n
        a, b = dominance_coords(graph, order)
        if k >= len(self):
            return np.full(n, n - 1, dtype=np.int64)
        sel = self.edge_labels < k
        ends_a = np.full(n, -1, dtype=np.int64)
        np.maximum.at(ends_a, a[sel], b[sel])
        ends_a = np.maximum.accumulate(ends_a[::-1])[::-1]
        i = np.arange(n)
        return np.maximum(ends_a[n - 1 - i], i)

    def staircase(self, graph: Graph, k: int, order=None) -> Staircase:
        ends = self.corner_ends(graph, k, order)
        return Staircase(ends - np.arange(self.n))

    def to_border_chain(self, graph: Graph, order=None) -> BorderChain:
        """Dense chain on ``graph.to_grid(order)`` (needs O(n^2) memory)."""
        n = self.n
        a, b = dominance_coords(graph, order)
        big = np.iinfo(np.int64).max
        lab = np.full((n, n), big, dtype=np.int64)
        lab[a, b] = self.edge_labels
        lab = np.minimum.accumulate(lab[::-1, :], axis=0)[::-1, :]
        lab = np.minimum.accumulate(lab[:, ::-1], axis=1)[:, ::-1]
        lab[lab == big] = len(self) - 1
        # back to (i, j) with i = n - 1 - a
        labels = lab[::-1, :].copy()
        mask = np.triu(np.ones((n, n), dtype=bool), 1)
        labels[~mask] = -1
        return BorderChain.from_labels(labels, graph.to_grid(order))


class SparseEngine:
    """Order/border operations on the edges of a graph (see :func:`run_hybrid`)."""

    def __init__(self, graph: Graph, order=None):
        self.graph = graph
        self.order = None if order is None else np.asarray(order)
        self.n = graph.n
        self.a, self.b = dominance_coords(graph, order)
        self.lattice = build_lattice(np.stack([self.a, self.b], axis=1), n_cols=max(self.n, 1))
        self.n_nodes = graph.n_edges
        self.domain = self.n * (self.n - 1) // 2
        self.w = graph.w
        self.integral = bool(np.all(self.w == np.round(self.w))) and self.w.sum() < 2.0 ** 52

    def traverse(self, k1, k2):
        return sparse_find_order(self.lattice, k1, k2)

    def borders(self, seq):
        """SparseChain of an edge sequence plus per-edge segment labels."""
        seq = np.asarray(seq, dtype=np.int64)
        swallowed = swallowed_counts(seq, self.a, self.b, self.n, self.n)
        counts = swallowed + 1
        sums = self.w[seq]
        rest = self.domain - int(counts.sum())
        if rest > 0:
            counts = np.append(counts, rest)
            sums = np.append(sums, 0.0)
        sumsqs = np.zeros(counts.shape[0])
        sumsqs[:seq.shape[0]] = self.w[seq] ** 2
        if counts.size == 0:
            block = np.zeros(0, dtype=np.int64)
        else:
            block = pool_prefixes(counts, sums, self.integral)
        n_seg = int(block[-1]) + 1 if block.size else 0
        labels = np.empty(self.n_nodes, dtype=np.int64)
        labels[seq] = block[:seq.shape[0]]
        chain = SparseChain(
            self.n, labels,
            np.bincount(block, weights=counts, minlength=n_seg).astype(np.int64),
            np.bincount(block, weights=sums, minlength=n_seg),
            np.bincount(block, weights=sumsqs, minlength=n_seg),
        )
        return chain, labels

    def same_chain(self, x, y) -> bool:
        return x == y


@dataclass
class SparseResult(HeuristicResult):
    lattice_edges: int = 0
    graph_edges: int = 0


def sparse_heuristic_borders(graph: Graph, order=None, model: ScoreModel | None = None,
                             seed=None, stall_window: int = 20, max_iters: int = 10_000,
                             force_random_every: int | None = None,
                             callback=None) -> SparseResult:
    """Hybrid flip/random border discovery that touches only the edges.

    Args:
      graph: the graph; zero-weight entries are non-edges.
      order: vertex order (default identity).
      model: score model used to pick the best chain (inferred if omitted).
      seed: seed of the random tie-breaker.
      callback: optional ``f(kind, chain)`` called after every traversal.

    Returns:
      SparseResult whose ``chain`` is a :class:`SparseChain`.
    """
    if model is None:
        if graph.n_edges and not np.all(graph.w == np.round(graph.w)):
            model = ScoreModel.gaussian()
        elif graph.n_edges and np.any(graph.w != 1):
            model = ScoreModel.poisson()
        else:
            model = ScoreModel.bernoulli()
    model.check_values(graph.w)
    engine = SparseEngine(graph, order)
    res = run_hybrid(engine, model, seed=seed, stall_window=stall_window, max_iters=max_iters,
                     force_random_every=force_random_every, callback=callback)
    return SparseResult(**vars(res), lattice_edges=engine.lattice.n_edges,
                        graph_edges=graph.n_edges)


__all__ = [
    "EdgeLattice", "build_lattice", "graph_lattice", "dominance_coords", "FrontierSet",
    "frontier_points", "sparse_find_order", "encapsulated_nonedges", "graph_nonedges",
    "expand_order", "SparseChain", "SparseEngine", "SparseResult", "sparse_heuristic_borders",
]
