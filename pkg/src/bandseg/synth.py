"""Synthetic graphs with planted diagonal bands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True, eq=False)
class PlantedBands:
    """A generated graph with its ground truth.

    ``order`` arranges the vertices so that the planted bands lie along the
    diagonal (vertex ``order[k]`` is at position ``k``).  Band ``k`` holds the
    pairs whose positions differ by ``offsets[k] < d <= offsets[k + 1]``.
    """

    graph: Graph
    order: np.ndarray
    offsets: np.ndarray
    probs: np.ndarray

    def band_of_pairs(self, i, j) -> np.ndarray:
        """Planted band of position pairs (i < j); -1 beyond the last band."""
        d = np.abs(np.asarray(j) - np.asarray(i))
        k = np.searchsorted(self.offsets, d, side="left") - 1
        return np.where(d > self.offsets[-1], -1, k)

    def band_sizes(self) -> np.ndarray:
        n = self.graph.n
        d = np.arange(1, n)
        per_offset = n - d
        k = self.band_of_pairs(np.zeros_like(d), d)
        return np.bincount(k[k >= 0], weights=per_offset[k >= 0],
                           minlength=len(self.probs)).astype(np.int64)


def generate_banded_graph(n: int, band_widths, band_probs, seed=None,
                          shuffle: bool = False) -> PlantedBands:
    """Random graph whose edge probability depends on the band of |i - j|.

    Args:
      n: number of vertices.
      band_widths: widths (in diagonal offsets) of the bands.  With one width
        fewer than probabilities the last band takes every remaining offset.
      band_probs: edge probability per band, strictly decreasing in (0, 1].
      seed: random seed.
      shuffle: relabel the vertices randomly (the returned order undoes it).
    """
    probs = np.asarray(band_probs, dtype=float).reshape(-1)
    widths = np.asarray(band_widths, dtype=np.int64).reshape(-1)
    if probs.size == 0:
        raise ValueError("at least one band is required")
    if np.any(probs <= 0) or np.any(probs > 1) or np.any(np.diff(probs) >= 0):
        raise ValueError("band probabilities must be strictly decreasing in (0, 1]")
    if widths.size not in (probs.size - 1, probs.size) or np.any(widths <= 0):
        raise ValueError("need one positive width per band (the last may be omitted)")
    if n < 1:
        raise ValueError("need at least one vertex")
    if widths.size == probs.size - 1:
        widths = np.append(widths, max(n - 1 - widths.sum(), 0))
    offsets = np.concatenate([[0], np.cumsum(widths)])
    rng = np.random.default_rng(seed)

    us, vs = [], []
    for k, p in enumerate(probs):
        for d in range(offsets[k] + 1, min(offsets[k + 1], n - 1) + 1):
            i = np.flatnonzero(rng.random(n - d) < p)
            us.append(i)
            vs.append(i + d)
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)

    order = np.arange(n)
    if shuffle:
        label = rng.permutation(n)  # position k gets vertex label[k]
        u, v = label[u], label[v]
        order = label
    return PlantedBands(Graph(n, u, v), order, offsets, probs)


__all__ = ["PlantedBands", "generate_banded_graph"]
