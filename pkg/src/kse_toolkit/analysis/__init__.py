"""Data-free channel importance from kernel sparsity and entropy."""

from __future__ import annotations

from .kse import (
    DEFAULT_ALPHA,
    DEFAULT_K_NEIGHBORS,
    KseReport,
    NeighborMatrix,
    analyze_layer,
    analyze_model,
    density_metric,
    kernel_entropy,
    kernel_sparsity,
    knn_distance_matrix,
    kse_indicator,
    minmax_normalize,
    read_reports,
    write_reports,
)

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_K_NEIGHBORS",
    "KseReport",
    "NeighborMatrix",
    "kernel_sparsity",
    "knn_distance_matrix",
    "density_metric",
    "kernel_entropy",
    "minmax_normalize",
    "kse_indicator",
    "analyze_layer",
    "analyze_model",
    "write_reports",
    "read_reports",
]
