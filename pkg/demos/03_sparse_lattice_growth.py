"""How the edge-only engine scales with the graph.

The sparse engine never materialises the n x n grid.  Its work is driven
by the dominance lattice over the edges, whose size stays a small multiple
of the edge count on banded graphs.  This script prints that ratio and the
time of a fixed number of iterations for growing n.

Run:  python demos/03_sparse_lattice_growth.py
"""

import time

from bandseg import generate_banded_graph, sparse_heuristic_borders
from bandseg.sparse import graph_lattice

print(f"{'n':>6} {'edges':>9} {'lattice':>9} {'ratio':>6} {'200 iters':>10}")
for n in (250, 500, 1000, 2000):
    pb = generate_banded_graph(n, [n // 100, n // 50], [0.8, 0.4, 0.05], seed=0)
    g = pb.graph
    lat = graph_lattice(g)
    t0 = time.perf_counter()
    sparse_heuristic_borders(g, order=pb.order, seed=0, max_iters=200)
    dt = time.perf_counter() - t0
    print(f"{n:>6} {g.n_edges:>9} {lat.n_edges:>9} {lat.n_edges / g.n_edges:>6.2f} {dt:>9.1f}s")
