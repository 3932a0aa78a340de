"""Per-layer compression and acceleration ratios.

The compression ratio compares dense parameter storage ``N*C*Kh*Kw`` with
the centroids plus index overhead, counted in 32-bit parameter units::

    sum_c (q_c * Kh * Kw + N * log2(q_c) / 32)

``log2`` is exact here (the file format rounds it up; see
:func:`kse_toolkit.model.compressed_section_bytes` for on-disk sizes) and
is taken as 0 for ``q_c <= 1``. Biases are counted on neither side.
"""

from __future__ import annotations

import logging
import math

from ..errors import ShapeError
from ..model import CompressedLayer
from ..utils import log

BITS_PER_PARAM = 32


def _check_dims(layer: CompressedLayer, dense_dims: tuple[int, int, int, int] | None) -> None:
    if dense_dims is not None and tuple(dense_dims) != layer.dense_shape:
        raise ShapeError(
            f"dense dims {tuple(dense_dims)} do not match the compressed layer {layer.dense_shape}"
        )


def index_bits_exact(q_c: int) -> float:
    """Return ``log2 q_c``, or 0 for ``q_c <= 1``."""
    return math.log2(q_c) if q_c > 1 else 0.0


def compressed_params(layer: CompressedLayer) -> float:
    """Return the compressed size of a layer in equivalent 32-bit parameters."""
    n, _, kh, kw = layer.dense_shape
    return math.fsum(
        q_c * kh * kw + n * index_bits_exact(q_c) / BITS_PER_PARAM for q_c in layer.q.tolist()
    )


def compressed_bits(layer: CompressedLayer) -> float:
    """Return the compressed size of a layer in bits (exact ``log2`` index cost)."""
    n, _, kh, kw = layer.dense_shape
    return math.fsum(
        q_c * kh * kw * BITS_PER_PARAM + n * index_bits_exact(q_c) for q_c in layer.q.tolist()
    )


def compression_ratio(
    layer: CompressedLayer, dense_dims: tuple[int, int, int, int] | None = None
) -> float:
    """Return the parameter compression ratio of one layer.

    Parameters
    ----------
    layer : CompressedLayer
        Compressed payload.
    dense_dims : tuple[int, int, int, int] or None, default=None
        Dense ``(N, C, Kh, Kw)``; checked against the layer when given.

    Returns
    -------
    float
        ``N*C*Kh*Kw`` over the compressed size; ``inf`` (with a warning)
        when every channel is pruned.

    Raises
    ------
    ShapeError
        If ``dense_dims`` disagrees with the layer.

    Examples
    --------
    >>> import numpy as np
    >>> layer = CompressedLayer(
    ...     q=[2, 2],
    ...     centroids=(np.zeros((2, 3, 3)), np.ones((2, 3, 3))),
    ...     index_table=np.array([[1, 1], [2, 2], [1, 1], [2, 2]]),
    ...     n_filters=4, kernel_h=3, kernel_w=3,
    ... )
    >>> round(compression_ratio(layer), 3)
    1.986
    """
    _check_dims(layer, dense_dims)
    n, c_in, kh, kw = layer.dense_shape
    denominator = compressed_params(layer)
    if denominator == 0:
        log("compression ratio is infinite: every channel is pruned", level=logging.WARNING)
        return math.inf
    return (n * c_in * kh * kw) / denominator


def acceleration_ratio(
    layer: CompressedLayer, dense_dims: tuple[int, int, int, int] | None = None
) -> float:
    """Return ``N*C / sum(q_c)``; ``inf`` (with a warning) when ``sum(q_c) == 0``.

    Examples
    --------
    >>> import numpy as np
    >>> layer = CompressedLayer(
    ...     q=[1], centroids=(np.zeros((1, 1, 1)),), index_table=np.ones((4, 1)),
    ...     n_filters=4, kernel_h=1, kernel_w=1,
    ... )
    >>> acceleration_ratio(layer)
    4.0
    """
    _check_dims(layer, dense_dims)
    n, c_in, _, _ = layer.dense_shape
    kept = layer.total_kernels
    if kept == 0:
        log("acceleration ratio is infinite: every channel is pruned", level=logging.WARNING)
        return math.inf
    return (n * c_in) / kept


__all__ = [
    "BITS_PER_PARAM",
    "index_bits_exact",
    "compressed_params",
    "compressed_bits",
    "compression_ratio",
    "acceleration_ratio",
]
