"""Convolution, correlation and interpolation primitives.

Every primitive accumulates in float64. The public wrappers return float32
storage; the ``*_f64`` helpers keep double precision for the training path
and for exact arithmetic-order comparisons between the dense and the
compressed forward passes.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InputValidationError, ShapeError
from .types import ConvGeometry, FeatureStack, WeightTensor


def _windows(x: np.ndarray, kernel_h: int, kernel_w: int, geometry: ConvGeometry) -> np.ndarray:
    """Return the strided ``Hout x Wout x Kh x Kw`` window view of padded ``x``."""
    out_h, out_w = geometry.output_size(x.shape[0], x.shape[1], kernel_h, kernel_w)
    pad_h, pad_w = geometry.padding
    padded = np.pad(x, ((pad_h, pad_h), (pad_w, pad_w))) if pad_h or pad_w else x
    view = sliding_window_view(padded, (kernel_h, kernel_w))
    stride_h, stride_w = geometry.stride
    return view[::stride_h, ::stride_w][:out_h, :out_w]


def correlate_channel_f64(
    x: np.ndarray, kernels: np.ndarray, geometry: ConvGeometry
) -> np.ndarray:
    """Cross-correlate one 2D map with a stack of 2D kernels.

    Parameters
    ----------
    x : np.ndarray
        Input map of shape ``H x W``.
    kernels : np.ndarray
        Kernel stack of shape ``m x Kh x Kw``.
    geometry : ConvGeometry
        Stride and zero-padding.

    Returns
    -------
    np.ndarray
        Float64 activation maps of shape ``m x Hout x Wout``.
    """
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    windows = _windows(x, kernels.shape[1], kernels.shape[2], geometry)
    return np.einsum("hwij,mij->mhw", windows, kernels)


def conv_dense_f64(x: np.ndarray, weights: np.ndarray, geometry: ConvGeometry) -> np.ndarray:
    """Return ``Y_n = sum_c W_{n,c} * X_c`` in float64.

    Channels are accumulated in ascending order, one shared-input batch of
    ``N`` kernels per channel.

    Parameters
    ----------
    x : np.ndarray
        Input of shape ``C x H x W``.
    weights : np.ndarray
        Weights of shape ``N x C x Kh x Kw``.
    geometry : ConvGeometry
        Stride and zero-padding.

    Returns
    -------
    np.ndarray
        Float64 output of shape ``N x Hout x Wout``.

    Raises
    ------
    ShapeError
        If the channel counts disagree.
    """
    if x.shape[0] != weights.shape[1]:
        raise ShapeError(
            f"input has {x.shape[0]} channels but weights expect {weights.shape[1]}",
            context={"input_shape": x.shape, "weight_shape": weights.shape},
        )
    out_h, out_w = geometry.output_size(x.shape[1], x.shape[2], weights.shape[2], weights.shape[3])
    out = np.zeros((weights.shape[0], out_h, out_w), dtype=np.float64)
    for c in range(x.shape[0]):
        out += correlate_channel_f64(x[c], weights[:, c], geometry)
    return out


def kernel_grad_f64(
    x: np.ndarray,
    grad_maps: np.ndarray,
    kernel_h: int,
    kernel_w: int,
    geometry: ConvGeometry,
) -> np.ndarray:
    """Return the gradient of ``sum_m <G_m, x * K_m>`` with respect to each ``K_m``.

    This is the valid cross-correlation between the padded input map and
    each output gradient map, taken with the forward stride.

    Parameters
    ----------
    x : np.ndarray
        Forward input map of shape ``H x W``.
    grad_maps : np.ndarray
        Output gradients of shape ``m x Hout x Wout``.
    kernel_h, kernel_w : int
        Kernel size.
    geometry : ConvGeometry
        Forward stride and padding.

    Returns
    -------
    np.ndarray
        Float64 kernel gradients of shape ``m x Kh x Kw``.
    """
    windows = _windows(np.asarray(x, dtype=np.float64), kernel_h, kernel_w, geometry)
    return np.einsum("hwij,mhw->mij", windows, np.asarray(grad_maps, dtype=np.float64))


def input_grad_f64(
    grad_maps: np.ndarray,
    kernels: np.ndarray,
    height: int,
    width: int,
    geometry: ConvGeometry,
) -> np.ndarray:
    """Return the gradient with respect to the input map (transpose correlation).

    Parameters
    ----------
    grad_maps : np.ndarray
        Output gradients of shape ``m x Hout x Wout``.
    kernels : np.ndarray
        Kernels of shape ``m x Kh x Kw`` used in the forward pass.
    height, width : int
        Forward input size.
    geometry : ConvGeometry
        Forward stride and padding.

    Returns
    -------
    np.ndarray
        Float64 input gradient of shape ``height x width``.
    """
    grad_maps = np.asarray(grad_maps, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    _, out_h, out_w = grad_maps.shape
    _, kernel_h, kernel_w = kernels.shape
    pad_h, pad_w = geometry.padding
    stride_h, stride_w = geometry.stride
    padded = np.zeros((height + 2 * pad_h, width + 2 * pad_w), dtype=np.float64)
    for u in range(kernel_h):
        for v in range(kernel_w):
            contribution = np.einsum("m,mhw->hw", kernels[:, u, v], grad_maps)
            padded[
                u : u + stride_h * (out_h - 1) + 1 : stride_h,
                v : v + stride_w * (out_w - 1) + 1 : stride_w,
            ] += contribution
    return padded[pad_h : pad_h + height, pad_w : pad_w + width]


def conv2d_single(x: FeatureStack | np.ndarray, k: np.ndarray, g: ConvGeometry) -> np.ndarray:
    """Cross-correlate a single-channel input with one 2D kernel.

    Parameters
    ----------
    x : FeatureStack or np.ndarray
        Single-channel stack (``1 x H x W``) or a bare ``H x W`` map.
    k : np.ndarray
        Kernel of shape ``Kh x Kw``.
    g : ConvGeometry
        Stride and zero-padding.

    Returns
    -------
    np.ndarray
        Float32 activation map of shape ``Hout x Wout``.

    Raises
    ------
    InvalidGeometryError
        If the geometry yields a non-positive output size.

    Examples
    --------
    >>> import numpy as np
    >>> conv2d_single(np.array([[2.0]]), np.array([[3.0]]), ConvGeometry())
    array([[6.]], dtype=float32)
    """
    data = x.data if isinstance(x, FeatureStack) else np.asarray(x)
    if data.ndim == 3:
        if data.shape[0] != 1:
            raise ShapeError(f"conv2d_single expects one channel, got {data.shape[0]}")
        data = data[0]
    kernel = np.asarray(k)
    if data.ndim != 2 or kernel.ndim != 2:
        raise ShapeError("conv2d_single expects a 2D map and a 2D kernel")
    return correlate_channel_f64(data, kernel[None], g)[0].astype(np.float32)


def conv2d_dense(x: FeatureStack, w: WeightTensor, g: ConvGeometry) -> FeatureStack:
    """Apply a dense convolution layer without bias.

    Parameters
    ----------
    x : FeatureStack
        Input with ``C`` channels.
    w : WeightTensor
        Weights ``N x C x Kh x Kw``.
    g : ConvGeometry
        Stride and zero-padding.

    Returns
    -------
    FeatureStack
        Output with ``N`` channels.

    Raises
    ------
    ShapeError
        If ``x.channels != w.in_channels``.
    """
    return FeatureStack(conv_dense_f64(x.data, w.data, g))


def flatten_kernel(w: WeightTensor, n: int, c: int) -> np.ndarray:
    """Return kernel ``W_{n,c}`` flattened row-major to length ``Kh*Kw``.

    Raises
    ------
    InputValidationError
        If ``n`` or ``c`` is out of range.
    """
    if not 0 <= n < w.n_filters or not 0 <= c < w.in_channels:
        raise InputValidationError(
            f"kernel index ({n}, {c}) out of range for {w.n_filters}x{w.in_channels}"
        )
    return w.data[n, c].reshape(-1).copy()


def unflatten_kernel(vector: np.ndarray, kernel_h: int, kernel_w: int) -> np.ndarray:
    """Inverse of :func:`flatten_kernel`."""
    vector = np.asarray(vector)
    if vector.size != kernel_h * kernel_w:
        raise ShapeError(
            f"cannot reshape {vector.size} values into a {kernel_h}x{kernel_w} kernel"
        )
    return vector.reshape(kernel_h, kernel_w)


def bilinear_upscale(m: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2D map with align-corners bilinear interpolation.

    Parameters
    ----------
    m : np.ndarray
        Input map of shape ``H x W`` (both ``>= 1``).
    out_h, out_w : int
        Target size (both ``>= 1``).

    Returns
    -------
    np.ndarray
        Float64 map of shape ``out_h x out_w``.

    Raises
    ------
    InputValidationError
        If a target dimension is zero or the input is not 2D.

    Examples
    --------
    >>> import numpy as np
    >>> bilinear_upscale(np.array([[0.0, 1.0], [0.0, 1.0]]), 2, 3)[0]
    array([0. , 0.5, 1. ])
    """
    source = np.asarray(m, dtype=np.float64)
    if source.ndim != 2 or min(source.shape) < 1:
        raise InputValidationError(f"bilinear_upscale expects a non-empty 2D map, got {source.shape}")
    if out_h < 1 or out_w < 1:
        raise InputValidationError(f"target size must be positive, got {out_h}x{out_w}")

    def axis_weights(size_in: int, size_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if size_out == 1 or size_in == 1:
            coords = np.zeros(size_out, dtype=np.float64)
        else:
            coords = np.arange(size_out, dtype=np.float64) * (size_in - 1) / (size_out - 1)
        lower = np.floor(coords).astype(np.int64)
        lower = np.clip(lower, 0, size_in - 1)
        upper = np.minimum(lower + 1, size_in - 1)
        return lower, upper, coords - lower

    y0, y1, wy = axis_weights(source.shape[0], out_h)
    x0, x1, wx = axis_weights(source.shape[1], out_w)
    # a + (b - a) * w keeps constant regions bit-exact
    top = source[y0][:, x0] + (source[y0][:, x1] - source[y0][:, x0]) * wx
    bottom = source[y1][:, x0] + (source[y1][:, x1] - source[y1][:, x0]) * wx
    return top + (bottom - top) * wy[:, None]


__all__ = [
    "correlate_channel_f64",
    "conv_dense_f64",
    "kernel_grad_f64",
    "input_grad_f64",
    "conv2d_single",
    "conv2d_dense",
    "flatten_kernel",
    "unflatten_kernel",
    "bilinear_upscale",
]
