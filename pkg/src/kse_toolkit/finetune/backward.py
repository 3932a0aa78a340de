"""Hand-derived gradients of the forward passes.

Everything here runs in float64. The loss is softmax cross-entropy on the
flattened model output, so the last layer must produce ``K x 1 x 1``
class scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from ..engine import run_layers
from ..enums import LayerKind
from ..errors import InputValidationError, KseToolkitError, LayerError, ShapeError
from ..model import CompressedLayer, LayerSpec, ModelGraph
from ..tensor import ConvGeometry, input_grad_f64, kernel_grad_f64


@dataclass(frozen=True, eq=False)
class LayerGradients:
    """Gradients of one weight-bearing layer.

    Attributes
    ----------
    centroids : tuple[np.ndarray, ...] or None
        Per-channel ``q_c x Kh x Kw`` gradients of a compressed payload.
    weights : np.ndarray or None
        ``N x C x Kh x Kw`` gradient of a dense payload.
    bias : np.ndarray or None
        Length-``N`` bias gradient.
    """

    centroids: tuple[np.ndarray, ...] | None = None
    weights: np.ndarray | None = None
    bias: np.ndarray | None = None

    def __add__(self, other: LayerGradients) -> LayerGradients:
        return LayerGradients(
            centroids=_add_optional_tuple(self.centroids, other.centroids),
            weights=_add_optional(self.weights, other.weights),
            bias=_add_optional(self.bias, other.bias),
        )

    def scaled(self, factor: float) -> LayerGradients:
        """Return every gradient multiplied by ``factor``."""
        return LayerGradients(
            centroids=None if self.centroids is None else tuple(g * factor for g in self.centroids),
            weights=None if self.weights is None else self.weights * factor,
            bias=None if self.bias is None else self.bias * factor,
        )


ModelGradients = dict[int, LayerGradients]
"""Layer index to gradients, for weight-bearing layers only."""


def _add_optional(a: np.ndarray | None, b: np.ndarray | None) -> np.ndarray | None:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _add_optional_tuple(
    a: tuple[np.ndarray, ...] | None, b: tuple[np.ndarray, ...] | None
) -> tuple[np.ndarray, ...] | None:
    if a is None:
        return b
    if b is None:
        return a
    return tuple(x + y for x, y in zip(a, b))


def add_gradients(a: ModelGradients, b: ModelGradients) -> ModelGradients:
    """Return the layer-wise sum of two gradient maps."""
    merged = dict(a)
    for idx, grads in b.items():
        merged[idx] = merged[idx] + grads if idx in merged else grads
    return merged


def softmax_cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Return the loss ``logsumexp(z) - z[label]`` and its gradient ``softmax(z) - onehot``.

    Examples
    --------
    >>> import numpy as np
    >>> loss, grad = softmax_cross_entropy(np.zeros(4), 1)
    >>> round(loss, 6), grad.tolist()
    (1.386294, [0.25, -0.75, 0.25, 0.25])
    """
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not 0 <= label < z.size:
        raise InputValidationError(f"label {label} out of range for {z.size} classes")
    loss = float(logsumexp(z) - z[label])
    grad = softmax(z)
    grad[label] -= 1.0
    return loss, grad


def backward_dense_layer(
    x: np.ndarray,
    weights: np.ndarray,
    grad_out: np.ndarray,
    geometry: ConvGeometry | None = None,
    *,
    need_input: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Return the weight and input gradients of a dense convolution.

    Parameters
    ----------
    x : np.ndarray
        Forward input ``C x H x W``.
    weights : np.ndarray
        ``N x C x Kh x Kw`` weights.
    grad_out : np.ndarray
        ``N x Hout x Wout`` gradient of the layer output.
    geometry : ConvGeometry or None, default=None
        Forward stride and padding.
    need_input : bool, default=True
        Skip the input gradient when False.

    Returns
    -------
    tuple[np.ndarray, np.ndarray or None]
        Weight gradient and input gradient.
    """
    geometry = geometry or ConvGeometry()
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    _check_grad_shape(x, weights.shape, grad_out, geometry)
    _, _, kh, kw = weights.shape
    grad_w = np.stack(
        [kernel_grad_f64(x[c], grad_out, kh, kw, geometry) for c in range(x.shape[0])], axis=1
    )
    if not need_input:
        return grad_w, None
    height, width = x.shape[1:]
    grad_x = np.stack(
        [input_grad_f64(grad_out, weights[:, c], height, width, geometry) for c in range(x.shape[0])]
    )
    return grad_w, grad_x


def backward_compressed_layer(
    x: np.ndarray,
    layer: CompressedLayer,
    grad_out: np.ndarray,
    geometry: ConvGeometry | None = None,
    *,
    need_input: bool = True,
) -> tuple[tuple[np.ndarray, ...], np.ndarray | None]:
    """Return centroid and input gradients of a compressed layer.

    The gradient of centroid ``B_{i,c}`` is the valid correlation of
    ``X_c`` with the sum of ``dL/dY_n`` over filters ``n`` whose index
    ``I_{n,c}`` is ``i``. The input gradient is the transpose correlation
    with the expanded kernels, computed from the same grouped sums.

    Parameters
    ----------
    x : np.ndarray
        Forward input ``C x H x W``.
    layer : CompressedLayer
        Compressed payload.
    grad_out : np.ndarray
        ``N x Hout x Wout`` gradient of the layer output.
    geometry : ConvGeometry or None, default=None
        Forward stride and padding.
    need_input : bool, default=True
        Skip the input gradient when False.

    Returns
    -------
    tuple[tuple[np.ndarray, ...], np.ndarray or None]
        Per-channel ``q_c x Kh x Kw`` centroid gradients (empty for pruned
        channels) and the ``C x H x W`` input gradient.

    Raises
    ------
    ShapeError
        If ``x`` or ``grad_out`` disagree with the layer.
    """
    geometry = geometry or ConvGeometry()
    x = np.asarray(x, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    _check_grad_shape(x, layer.dense_shape, grad_out, geometry)
    height, width = x.shape[1:]
    kh, kw = layer.kernel_h, layer.kernel_w
    grad_centroids: list[np.ndarray] = []
    grad_x = np.zeros(x.shape, dtype=np.float64) if need_input else None
    for c in range(layer.in_channels):
        q_c = int(layer.q[c])
        if q_c == 0:
            grad_centroids.append(np.zeros((0, kh, kw), dtype=np.float64))
            continue
        grouped = np.zeros((q_c,) + grad_out.shape[1:], dtype=np.float64)
        np.add.at(grouped, layer.index_table[:, c] - 1, grad_out)
        grad_centroids.append(kernel_grad_f64(x[c], grouped, kh, kw, geometry))
        if grad_x is not None:
            grad_x[c] = input_grad_f64(grouped, layer.centroids[c], height, width, geometry)
    return tuple(grad_centroids), grad_x


def _check_grad_shape(
    x: np.ndarray,
    dense_shape: tuple[int, ...],
    grad_out: np.ndarray,
    geometry: ConvGeometry,
) -> None:
    n, c_in, kh, kw = dense_shape
    if x.ndim != 3 or x.shape[0] != c_in:
        raise ShapeError(f"input {x.shape} does not match a layer with {c_in} input channels")
    out_h, out_w = geometry.output_size(x.shape[1], x.shape[2], kh, kw)
    if grad_out.shape != (n, out_h, out_w):
        raise ShapeError(
            f"output gradient {grad_out.shape} does not match the layer output {(n, out_h, out_w)}"
        )


def _pool_backward(grad: np.ndarray, input_shape: tuple[int, ...], pool_size: int | None) -> np.ndarray:
    channels, height, width = input_shape
    if pool_size is None:
        return np.broadcast_to(grad / (height * width), input_shape).copy()
    out = np.zeros(input_shape, dtype=np.float64)
    spread = np.repeat(np.repeat(grad, pool_size, axis=1), pool_size, axis=2) / pool_size**2
    out[:, : spread.shape[1], : spread.shape[2]] = spread
    return out


def _layer_backward(
    layer: LayerSpec,
    layer_input: np.ndarray,
    layer_output: np.ndarray,
    grad: np.ndarray,
    *,
    include_dense: bool,
    need_input: bool,
) -> tuple[np.ndarray | None, LayerGradients | None]:
    kind = layer.kind
    if kind.weight_bearing:
        bias_grad = grad.sum(axis=(1, 2)) if include_dense and layer.bias is not None else None
        if layer.compressed is not None:
            centroid_grads, grad_x = backward_compressed_layer(
                layer_input, layer.compressed, grad, layer.geometry, need_input=need_input
            )
            return grad_x, LayerGradients(centroids=centroid_grads, bias=bias_grad)
        assert layer.weights is not None
        if not include_dense:
            if not need_input:
                return None, None
            _, c_in, _, _ = layer.weights.shape
            weights = layer.weights.data.astype(np.float64)
            height, width = layer_input.shape[1:]
            grad_x = np.stack(
                [input_grad_f64(grad, weights[:, c], height, width, layer.geometry) for c in range(c_in)]
            )
            return grad_x, None
        grad_w, grad_x = backward_dense_layer(
            layer_input, layer.weights.data, grad, layer.geometry, need_input=need_input
        )
        return grad_x, LayerGradients(weights=grad_w, bias=bias_grad)
    if kind is LayerKind.RELU:
        return grad * (layer_output > 0), None
    if kind is LayerKind.FLATTEN:
        return grad.reshape(layer_input.shape), None
    if kind is LayerKind.POOLING_AVG:
        return _pool_backward(grad, layer_input.shape, layer.pool_size), None
    if kind is LayerKind.RESIDUAL_ADD:
        return grad, None
    raise ShapeError(f"unsupported layer kind {kind}")


def loss_and_gradients(
    m: ModelGraph,
    image: np.ndarray,
    label: int,
    *,
    include_dense: bool = False,
) -> tuple[float, ModelGradients]:
    """Run one example forward and backward.

    Parameters
    ----------
    m : ModelGraph
        Model whose output is ``K x 1 x 1`` class scores.
    image : np.ndarray
        Input matching ``m.input_shape``.
    label : int
        Target class in ``[0, K)``.
    include_dense : bool, default=False
        Also return gradients of dense weights and of every bias.

    Returns
    -------
    tuple[float, ModelGradients]
        Cross-entropy loss and the gradients of the trainable payloads.

    Raises
    ------
    ShapeError
        If the model output is not a score vector.
    LayerError
        If a layer's backward pass fails; the message names it.
    """
    out_shape = m.output_shape()
    if out_shape[1:] != (1, 1):
        raise ShapeError(f"model output {out_shape} is not a K x 1 x 1 score vector")
    inputs: list[np.ndarray] = []
    outputs: list[np.ndarray] = []

    def record(_: int, __: LayerSpec, layer_input: np.ndarray, output: np.ndarray) -> None:
        inputs.append(layer_input)
        outputs.append(output)

    logits = run_layers(m, image, observer=record)
    loss, grad_logits = softmax_cross_entropy(logits.reshape(-1), label)

    # Gradients of each layer output; residual sources receive extra terms.
    output_grads: list[np.ndarray | None] = [None] * len(m.layers)
    output_grads[-1] = grad_logits.reshape(out_shape)
    first_weighted = min((idx for idx, _ in m.weight_layers()), default=0)
    grads: ModelGradients = {}
    for idx in range(len(m.layers) - 1, -1, -1):
        grad = output_grads[idx]
        if grad is None:
            continue
        layer = m.layers[idx]
        need_input = idx > first_weighted
        try:
            grad_x, layer_grads = _layer_backward(
                layer,
                inputs[idx],
                outputs[idx],
                grad,
                include_dense=include_dense,
                need_input=need_input,
            )
        except KseToolkitError as exc:
            raise LayerError(
                f"layer {idx} ({layer.name}) backward failed: {exc}",
                context={"layer": layer.name, "index": idx},
            ) from exc
        if layer_grads is not None:
            grads[idx] = layer_grads
        if layer.kind is LayerKind.RESIDUAL_ADD and layer.source >= 0:
            output_grads[layer.source] = _add_optional(output_grads[layer.source], grad)
        if grad_x is not None and idx > 0:
            output_grads[idx - 1] = _add_optional(output_grads[idx - 1], grad_x)
    return loss, grads


def example_loss(m: ModelGraph, image: np.ndarray, label: int) -> float:
    """Return the cross-entropy loss of one example in float64."""
    logits = run_layers(m, image)
    return softmax_cross_entropy(logits.reshape(-1), label)[0]


__all__ = [
    "LayerGradients",
    "ModelGradients",
    "add_gradients",
    "softmax_cross_entropy",
    "backward_dense_layer",
    "backward_compressed_layer",
    "loss_and_gradients",
    "example_loss",
]
