"""Kernel budgets and per-channel kernel clustering."""

from __future__ import annotations

from .compress import CONFIG_METADATA_PREFIX, compress_layer, compress_model
from .config import CompressionConfig
from .kmeans import ClusterResult, kernel_count, kmeans_kernels

__all__ = [
    "CompressionConfig",
    "ClusterResult",
    "kernel_count",
    "kmeans_kernels",
    "compress_layer",
    "compress_model",
    "CONFIG_METADATA_PREFIX",
]
