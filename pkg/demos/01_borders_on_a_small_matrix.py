"""Borders of a small binary matrix: exact isotonic fit versus the heuristic.

A 12 x 12 matrix is generated with a dense top-left corner that fades toward
the bottom-right.  Its exact border chain comes from a monotone least-squares
fit; the hybrid flip/random heuristic searches monotonic visiting orders for
the same chain.  Both are then grouped into three bands.

Run:  python demos/01_borders_on_a_small_matrix.py
"""

import numpy as np

from bandseg import ScoreModel, ValueGrid, exact_borders, heuristic_borders, segment_dp

rng = np.random.default_rng(0)
m = n = 12
r, c = np.indices((m, n))
# edge probability decays with the distance from the top-left corner
prob = np.clip(0.95 - 0.07 * (r + c), 0.02, 1)
values = (rng.random((m, n)) < prob).astype(float)
grid = ValueGrid(values)
model = ScoreModel.bernoulli()

print("input matrix")
for row in values.astype(int):
    print("  " + "".join(".#"[v] for v in row))

exact = exact_borders(grid)
heur = heuristic_borders(grid, model=model, seed=1)
print(f"\nexact chain:     {len(exact)} segments, score {exact.score(model):.4f}")
print(f"heuristic chain: {len(heur.chain)} segments, score {heur.chain.score(model):.4f}"
      f" ({heur.iterations} iterations, {heur.random_steps} random steps)")

# segment densities strictly decrease along the chain
print("exact segment densities:", np.round(exact.densities, 3).tolist())

seg = segment_dp(exact, 3, model)
print("\nthree bands over the exact chain")
for k in range(seg.K):
    print(f"  band {k}: {seg.counts[k]:3d} cells, density {seg.densities[k]:.3f}")

# map every cell to its band and draw it
band = np.searchsorted(seg.boundaries[1:], exact.labels, side="right")
print("\nband map (0 = densest)")
for row in band:
    print("  " + "".join(str(int(b)) for b in row))
