"""Compression and acceleration ratios and their reports."""

from __future__ import annotations

from .ratios import (
    BITS_PER_PARAM,
    acceleration_ratio,
    compressed_bits,
    compressed_params,
    compression_ratio,
    index_bits_exact,
)
from .report import (
    BIAS_NOTE,
    LayerRatio,
    RatioReport,
    RatioTotals,
    granularity_sweep,
    model_report,
    render_sweep,
)

__all__ = [
    "BITS_PER_PARAM",
    "index_bits_exact",
    "compressed_params",
    "compressed_bits",
    "compression_ratio",
    "acceleration_ratio",
    "LayerRatio",
    "RatioTotals",
    "RatioReport",
    "model_report",
    "granularity_sweep",
    "render_sweep",
    "BIAS_NOTE",
]
