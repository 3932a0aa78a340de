"""Forward passes and multiply-add accounting."""

from __future__ import annotations

from .flops import FlopCount, LayerFlops, count_flops
from .forward import (
    LayerObserver,
    compressed_conv_f64,
    expand_layer,
    expand_model,
    forward_compressed,
    forward_dense,
    run_layers,
    shared_activation_maps,
)

__all__ = [
    "LayerObserver",
    "forward_dense",
    "forward_compressed",
    "run_layers",
    "compressed_conv_f64",
    "shared_activation_maps",
    "expand_layer",
    "expand_model",
    "FlopCount",
    "LayerFlops",
    "count_flops",
]
