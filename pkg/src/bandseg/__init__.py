"""Monotone band discovery for graphs and matrices.

Typical use::

    from bandseg import generate_banded_graph, discover_bands
    pb = generate_banded_graph(500, [10, 20], [0.8, 0.4, 0.05], seed=0, shuffle=True)
    report = discover_bands(pb.graph, K=3, mode="sparse")  # Fiedler order by default
"""

from .core import (
    BandsegError, BorderChain, ConvergenceError, EmptySegmentError, InstanceTooLargeError,
    ModelError, ScoreModel, SegmentStats, Staircase, ValueGrid, compare_density, density,
    enumerate_staircases, segment_score, validate_staircase,
)
from .exact import borders_from_fit, brute_force_borders, exact_borders, grid_isotonic
from .graph import Graph
from .heuristic import find_order, heuristic_borders, random_monotonic_order
from .io import (
    ParseError, read_dense_matrix, read_edge_list, read_report_json, write_plot_data,
    write_report_json,
)
from .pipeline import BandReport, PipelineError, discover_bands, discover_bands_restarts
from .segmentation import Segmentation, bands_to_staircases, brute_force_segmentation, segment_dp
from .sparse import build_lattice, sparse_find_order, sparse_heuristic_borders
from .spectral import fiedler_order, fiedler_vector, refine_order
from .synth import PlantedBands, generate_banded_graph

__version__ = "0.1.0"

__all__ = [
    "BandsegError", "BorderChain", "ConvergenceError", "EmptySegmentError",
    "InstanceTooLargeError", "ModelError", "ScoreModel", "SegmentStats", "Staircase", "ValueGrid",
    "compare_density", "density", "enumerate_staircases", "segment_score", "validate_staircase",
    "borders_from_fit", "brute_force_borders", "exact_borders", "grid_isotonic", "Graph",
    "find_order", "heuristic_borders", "random_monotonic_order", "ParseError",
    "read_dense_matrix", "read_edge_list", "read_report_json", "write_plot_data",
    "write_report_json", "BandReport", "PipelineError", "discover_bands",
    "discover_bands_restarts", "Segmentation", "bands_to_staircases", "brute_force_segmentation",
    "segment_dp", "build_lattice", "sparse_find_order", "sparse_heuristic_borders",
    "fiedler_order", "fiedler_vector", "refine_order", "PlantedBands", "generate_banded_graph",
]
