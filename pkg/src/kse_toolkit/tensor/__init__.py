"""Dense tensor containers and convolution primitives."""

from __future__ import annotations

from .ops import (
    bilinear_upscale,
    conv2d_dense,
    conv2d_single,
    conv_dense_f64,
    correlate_channel_f64,
    flatten_kernel,
    input_grad_f64,
    kernel_grad_f64,
    unflatten_kernel,
)
from .types import ConvGeometry, FeatureStack, WeightTensor

__all__ = [
    "ConvGeometry",
    "FeatureStack",
    "WeightTensor",
    "conv2d_single",
    "conv2d_dense",
    "flatten_kernel",
    "unflatten_kernel",
    "bilinear_upscale",
    "correlate_channel_f64",
    "conv_dense_f64",
    "kernel_grad_f64",
    "input_grad_f64",
]
