"""Dense and compressed forward passes.

A compressed layer runs in two stages. Stage one convolves every kept input
channel ``X_c`` with its ``q_c`` centroids, giving the shared activation
maps ``Z_{i,c}``. Stage two fuses channels: output ``Y_n`` is the sum over
``c`` of ``Z_{I_{n,c}, c}``, skipping pruned channels. Peak extra memory is
``sum(q_c) * Hout * Wout`` floats per layer.

Both passes accumulate input channels in ascending order in float64, so an
identity-clustered layer reproduces the dense layer bit for bit.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import replace

import numpy as np

from ..enums import LayerKind
from ..errors import KseToolkitError, LayerError, ShapeError, StageError
from ..model import CompressedLayer, LayerSpec, ModelGraph
from ..tensor import ConvGeometry, FeatureStack, WeightTensor, conv_dense_f64, correlate_channel_f64
from ..utils import log
from ..workers import ordered_map

LayerObserver = Callable[[int, LayerSpec, np.ndarray, np.ndarray], None]
"""Hook ``(index, layer, layer_input, layer_output)`` called after each layer."""


def shared_activation_maps(
    x: np.ndarray,
    layer: CompressedLayer,
    geometry: ConvGeometry,
    *,
    worker_count: int | None = 1,
) -> list[np.ndarray | None]:
    """Return stage-one maps ``Z_{., c}`` per channel (None for pruned channels).

    Parameters
    ----------
    x : np.ndarray
        Layer input ``C x H x W``.
    layer : CompressedLayer
        Compressed payload.
    geometry : ConvGeometry
        Stride and padding.
    worker_count : int or None, default=1
        Threads for the per-channel convolutions.

    Returns
    -------
    list[np.ndarray or None]
        For channel ``c`` a float64 ``q_c x Hout x Wout`` stack.
    """

    def stage_one(c: int) -> np.ndarray | None:
        if layer.q[c] == 0:
            return None
        return correlate_channel_f64(x[c], layer.centroids[c], geometry)

    return ordered_map(stage_one, list(range(layer.in_channels)), worker_count=worker_count)


def compressed_conv_f64(
    x: np.ndarray,
    layer: CompressedLayer,
    geometry: ConvGeometry,
    *,
    worker_count: int | None = 1,
) -> np.ndarray:
    """Evaluate a compressed layer without bias in float64.

    Raises
    ------
    ShapeError
        If ``x`` does not have the layer's input channel count.
    """
    if x.shape[0] != layer.in_channels:
        raise ShapeError(
            f"input has {x.shape[0]} channels but the layer expects {layer.in_channels}"
        )
    out_h, out_w = geometry.output_size(x.shape[1], x.shape[2], layer.kernel_h, layer.kernel_w)
    out = np.zeros((layer.n_filters, out_h, out_w), dtype=np.float64)
    maps = shared_activation_maps(x, layer, geometry, worker_count=worker_count)
    for c, channel_maps in enumerate(maps):
        if channel_maps is None:
            continue
        out += channel_maps[layer.index_table[:, c] - 1]
    return out


def _pool(x: np.ndarray, pool_size: int | None) -> np.ndarray:
    if pool_size is None:
        return x.mean(axis=(1, 2), keepdims=True)
    channels, height, width = x.shape
    out_h, out_w = height // pool_size, width // pool_size
    cropped = x[:, : out_h * pool_size, : out_w * pool_size]
    return cropped.reshape(channels, out_h, pool_size, out_w, pool_size).mean(axis=(2, 4))


def _apply_layer(
    layer: LayerSpec,
    x: np.ndarray,
    model_input: np.ndarray,
    outputs: list[np.ndarray],
    worker_count: int | None,
) -> np.ndarray:
    kind = layer.kind
    if kind.weight_bearing:
        if layer.weights is not None:
            y = conv_dense_f64(x, layer.weights.data, layer.geometry)
        else:
            assert layer.compressed is not None
            if layer.compressed.total_kernels == 0:
                log(f"Layer {layer.name} has every channel pruned; output is its bias", logging.WARNING)
            y = compressed_conv_f64(x, layer.compressed, layer.geometry, worker_count=worker_count)
        if layer.bias is not None:
            y = y + layer.bias.astype(np.float64)[:, None, None]
        return y
    if kind is LayerKind.RELU:
        return np.maximum(x, 0.0)
    if kind is LayerKind.FLATTEN:
        return x.reshape(-1, 1, 1)
    if kind is LayerKind.POOLING_AVG:
        return _pool(x, layer.pool_size)
    if kind is LayerKind.RESIDUAL_ADD:
        other = model_input if layer.source == -1 else outputs[layer.source]
        if other.shape != x.shape:
            raise ShapeError(f"cannot add shapes {other.shape} and {x.shape}")
        return x + other
    raise ShapeError(f"unsupported layer kind {kind}")


def run_layers(
    m: ModelGraph,
    x: np.ndarray,
    *,
    observer: LayerObserver | None = None,
    worker_count: int | None = 1,
) -> np.ndarray:
    """Evaluate every layer on a float64 input and return the float64 output.

    Raises
    ------
    ShapeError
        If ``x`` does not match the model input shape.
    LayerError
        If a layer fails; the message names it.
    """
    data = np.asarray(x, dtype=np.float64)
    if data.shape != m.input_shape:
        raise ShapeError(
            f"input shape {data.shape} does not match model input {m.input_shape}"
        )
    outputs: list[np.ndarray] = []
    current = data
    for idx, layer in enumerate(m.layers):
        try:
            result = _apply_layer(layer, current, data, outputs, worker_count)
        except KseToolkitError as exc:
            raise LayerError(
                f"layer {idx} ({layer.name}) failed: {exc}",
                context={"layer": layer.name, "index": idx},
            ) from exc
        if observer is not None:
            observer(idx, layer, current, result)
        outputs.append(result)
        current = result
    return current


def _as_array(x: FeatureStack | np.ndarray) -> np.ndarray:
    return x.data if isinstance(x, FeatureStack) else np.asarray(x)


def forward_dense(
    m: ModelGraph,
    x: FeatureStack | np.ndarray,
    *,
    observer: LayerObserver | None = None,
) -> FeatureStack:
    """Run a dense model.

    Parameters
    ----------
    m : ModelGraph
        Model whose weight-bearing layers are all dense.
    x : FeatureStack or np.ndarray
        Input matching ``m.input_shape``.
    observer : LayerObserver or None, default=None
        Hook receiving every layer's input and output.

    Returns
    -------
    FeatureStack
        Model output in float32 storage.

    Raises
    ------
    StageError
        If the model carries compressed payloads.
    ShapeError
        If ``x`` does not match the model input shape.
    """
    if not m.is_dense:
        raise StageError("forward_dense needs a dense model; use forward_compressed")
    return FeatureStack(run_layers(m, _as_array(x), observer=observer))


def forward_compressed(
    m: ModelGraph,
    x: FeatureStack | np.ndarray,
    *,
    observer: LayerObserver | None = None,
    worker_count: int | None = 1,
) -> FeatureStack:
    """Run a compressed model with shared activation maps and channel fusion.

    Dense (exempt) layers run as in :func:`forward_dense`.

    Parameters
    ----------
    m : ModelGraph
        Model with compressed and/or dense payloads.
    x : FeatureStack or np.ndarray
        Input matching ``m.input_shape``.
    observer : LayerObserver or None, default=None
        Hook receiving every layer's input and output.
    worker_count : int or None, default=1
        Threads for stage-one convolutions inside each layer.

    Returns
    -------
    FeatureStack
        Model output in float32 storage.
    """
    return FeatureStack(
        run_layers(m, _as_array(x), observer=observer, worker_count=worker_count)
    )


def expand_layer(layer: CompressedLayer) -> WeightTensor:
    """Return the dense tensor ``W'_{n,c} = B_{I_{n,c}, c}``.

    Pruned channels expand to zero kernels.
    """
    expanded = np.zeros(layer.dense_shape, dtype=np.float32)
    for c in range(layer.in_channels):
        if layer.q[c] == 0:
            continue
        expanded[:, c] = layer.centroids[c][layer.index_table[:, c] - 1]
    return WeightTensor(expanded)


def expand_model(m: ModelGraph) -> ModelGraph:
    """Replace every compressed payload by its expanded dense tensor."""
    layers = [
        replace(layer, weights=expand_layer(layer.compressed), compressed=None)
        if layer.compressed is not None
        else layer
        for layer in m.layers
    ]
    return replace(m, layers=tuple(layers))


__all__ = [
    "LayerObserver",
    "shared_activation_maps",
    "compressed_conv_f64",
    "run_layers",
    "forward_dense",
    "forward_compressed",
    "expand_layer",
    "expand_model",
]
