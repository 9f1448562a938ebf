"""Undirected weighted graphs with vertices 0..n-1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .core import ValueGrid


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as a sorted edge list.

    Edges are kept with ``u < v`` in lexicographic order.  Self-loops are
    rejected and edges of weight zero are dropped (they are non-edges).

    Args:
      n: number of vertices.
      u, v: endpoint arrays (any orientation).
      w: positive weights, default 1.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __init__(self, n, u=(), v=(), w=None):
        u = np.asarray(u, dtype=np.int64).reshape(-1)
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        if u.shape != v.shape:
            raise ValueError("endpoint arrays differ in length")
        w = np.ones(u.shape[0]) if w is None else np.asarray(w, dtype=float).reshape(-1)
        if w.shape != u.shape:
            raise ValueError("one weight per edge is required")
        n = int(n)
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
            raise ValueError("vertex id out of range")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keep = w > 0
        lo, hi, w = lo[keep], hi[keep], w[keep]
        idx = np.lexsort((hi, lo))
        lo, hi, w = lo[idx], hi[idx], w[idx]
        if lo.size > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise ValueError("duplicate edges")
        for name, arr in (("u", lo), ("v", hi), ("w", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_adjacency(cls, a) -> "Graph":
        """Graph from the upper triangle of a square (dense or sparse) matrix."""
        a = sp.triu(sp.coo_matrix(a), k=1).tocoo()
        return cls(a.shape[0], a.row, a.col, a.data)

    @property
    def n_edges(self) -> int:
        return int(self.u.shape[0])

    @property
    def is_weighted(self) -> bool:
        return bool(np.any(self.w != 1))

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse adjacency matrix."""
        n = self.n
        a = sp.coo_matrix((self.w, (self.u, self.v)), shape=(n, n))
        return (a + a.T).tocsr()

    def dense_adjacency(self, order=None) -> np.ndarray:
        """Dense symmetric adjacency matrix, rows arranged by ``order``."""
        g = self if order is None else self.permuted(order)
        a = np.zeros((g.n, g.n))
        a[g.u, g.v] = g.w
        a[g.v, g.u] = g.w
        return a

    def permuted(self, order) -> "Graph":
        """Relabel so that vertex ``order[k]`` becomes vertex ``k``."""
        pos = positions(order, self.n)
        return Graph(self.n, pos[self.u], pos[self.v], self.w)

    def to_grid(self, order=None) -> ValueGrid:
        """Strict upper triangle of the adjacency matrix under ``order``."""
        return ValueGrid(np.triu(self.dense_adjacency(order), 1), triangle=True)

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n)

    def components(self) -> tuple[int, np.ndarray]:
        return connected_components(self.adjacency(), directed=False)

    def subgraph(self, vertices) -> "Graph":
        """Induced subgraph; vertex ``vertices[k]`` becomes ``k``."""
        vertices = np.asarray(vertices, dtype=np.int64)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[vertices] = np.arange(vertices.size)
        keep = (pos[self.u] >= 0) & (pos[self.v] >= 0)
        return Graph(vertices.size, pos[self.u[keep]], pos[self.v[keep]], self.w[keep])


def positions(order, n: int) -> np.ndarray:
    """Inverse permutation; raises if ``order`` is not a permutation of 0..n-1."""
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of the vertices")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    return pos


__all__ = ["Graph", "positions"]
