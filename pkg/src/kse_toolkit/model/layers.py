"""Layer specifications, compressed payloads and the model graph.

A :class:`ModelGraph` is an ordered list of :class:`LayerSpec` entries
evaluated one after another. Weight-bearing layers (``conv`` and
``fully-connected``, the latter stored as a 1x1 convolution) carry either
a dense :class:`~kse_toolkit.tensor.WeightTensor` or a
:class:`CompressedLayer`, never both.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike

from ..enums import LayerKind
from ..errors import CorruptIndexError, InputValidationError, ShapeError
from ..tensor import ConvGeometry, WeightTensor


@dataclass(frozen=True, eq=False)
class CompressedLayer:
    """Clustered kernels of one layer.

    Attributes
    ----------
    q : np.ndarray
        Kernel budget per input channel, length ``C``, ``0 <= q_c <= N``.
    centroids : tuple[np.ndarray, ...]
        For channel ``c`` a float32 array of shape ``q_c x Kh x Kw``
        (``0 x Kh x Kw`` for pruned channels).
    index_table : np.ndarray
        ``N x C`` int32 table of 1-based centroid indices ``I_{n,c}``.
        Columns of pruned channels hold 0; columns with ``q_c = 1`` hold 1
        and are never stored on disk.
    n_filters, kernel_h, kernel_w : int
        Dense dimensions the layer replaces.
    """

    q: np.ndarray
    centroids: tuple[np.ndarray, ...]
    index_table: np.ndarray
    n_filters: int
    kernel_h: int
    kernel_w: int

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=np.int64)
        if q.ndim != 1 or q.size < 1:
            raise ShapeError(f"q must be a non-empty vector, got shape {q.shape}")
        n, kh, kw = int(self.n_filters), int(self.kernel_h), int(self.kernel_w)
        if min(n, kh, kw) < 1:
            raise ShapeError(f"layer dimensions must be >= 1, got N={n}, Kh={kh}, Kw={kw}")
        if np.any(q < 0) or np.any(q > n):
            raise InputValidationError(f"every q_c must lie in [0, {n}], got {q.tolist()}")

        if len(self.centroids) != q.size:
            raise ShapeError(
                f"expected {q.size} centroid sets, got {len(self.centroids)}"
            )
        centroids = []
        for c, (q_c, stack) in enumerate(zip(q.tolist(), self.centroids)):
            array = np.array(stack, dtype=np.float32, order="C", copy=True)
            array = array.reshape(-1, kh, kw)
            if array.shape[0] != q_c:
                raise ShapeError(
                    f"channel {c} has {array.shape[0]} centroids but q_c = {q_c}"
                )
            if not np.all(np.isfinite(array)):
                raise InputValidationError(f"channel {c} centroids contain NaN or Inf")
            array.flags.writeable = False
            centroids.append(array)

        table = np.array(self.index_table, dtype=np.int32, order="C", copy=True)
        if table.shape != (n, q.size):
            raise ShapeError(f"index table must be {n}x{q.size}, got {table.shape}")
        for c, q_c in enumerate(q.tolist()):
            column = table[:, c]
            if q_c == 0:
                if np.any(column != 0):
                    raise CorruptIndexError(f"pruned channel {c} has index entries")
                continue
            if np.any(column < 1) or np.any(column > q_c):
                raise CorruptIndexError(
                    f"channel {c} index entries must lie in [1, {q_c}]",
                    context={"channel": c, "q_c": q_c},
                )
            if q_c >= 2 and np.unique(column).size != q_c:
                raise CorruptIndexError(
                    f"channel {c} has centroids no kernel refers to",
                    context={"channel": c, "q_c": q_c},
                )
        q.flags.writeable = False
        table.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "centroids", tuple(centroids))
        object.__setattr__(self, "index_table", table)
        object.__setattr__(self, "n_filters", n)
        object.__setattr__(self, "kernel_h", kh)
        object.__setattr__(self, "kernel_w", kw)

    @property
    def in_channels(self) -> int:
        return int(self.q.size)

    @property
    def dense_shape(self) -> tuple[int, int, int, int]:
        """Return ``(N, C, Kh, Kw)`` of the dense layer this replaces."""
        return (self.n_filters, self.in_channels, self.kernel_h, self.kernel_w)

    @property
    def total_kernels(self) -> int:
        """Return ``sum_c q_c``."""
        return int(self.q.sum())

    def with_centroids(self, centroids: list[np.ndarray] | tuple[np.ndarray, ...]) -> CompressedLayer:
        """Return a copy with new centroid values and the same structure."""
        return replace(self, centroids=tuple(centroids))


@dataclass(frozen=True, eq=False)
class LayerSpec:
    """One layer of a :class:`ModelGraph`.

    Attributes
    ----------
    kind : LayerKind
        Layer type.
    name : str
        Identifier used in reports and error messages.
    geometry : ConvGeometry
        Stride/padding (``conv`` only; 1x1 identity for fully-connected).
    weights : WeightTensor or None
        Dense payload of a weight-bearing layer.
    compressed : CompressedLayer or None
        Compressed payload of a weight-bearing layer.
    bias : np.ndarray or None
        Optional dense per-output-channel bias; never compressed.
    compress_exempt : bool
        Whether compression skips this layer.
    source : int
        ``residual-add`` only: index of the earlier layer whose output is
        added, ``-1`` for the model input.
    pool_size : int or None
        ``pooling-avg`` only: window and stride; None pools globally.
    """

    kind: LayerKind
    name: str
    geometry: ConvGeometry = field(default_factory=ConvGeometry)
    weights: WeightTensor | None = None
    compressed: CompressedLayer | None = None
    bias: np.ndarray | None = None
    compress_exempt: bool = False
    source: int = -1
    pool_size: int | None = None

    def __post_init__(self) -> None:
        kind = LayerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not self.name:
            raise InputValidationError("layer name must be non-empty")
        if kind.weight_bearing:
            if (self.weights is None) == (self.compressed is None):
                raise InputValidationError(
                    f"layer {self.name} must carry exactly one of a dense or compressed payload"
                )
            kh, kw = self.kernel_size
            if kind is LayerKind.FULLY_CONNECTED and (kh, kw) != (1, 1):
                raise ShapeError(f"fully-connected layer {self.name} must use 1x1 kernels")
            if kind is LayerKind.FULLY_CONNECTED and self.geometry != ConvGeometry():
                raise ShapeError(f"fully-connected layer {self.name} has no stride or padding")
        elif self.weights is not None or self.compressed is not None or self.bias is not None:
            raise InputValidationError(f"{kind.value} layer {self.name} cannot carry weights")
        if self.bias is not None:
            bias = np.array(self.bias, dtype=np.float32, copy=True).reshape(-1)
            if bias.size != self.out_channels:
                raise ShapeError(
                    f"layer {self.name} bias has {bias.size} entries for {self.out_channels} filters"
                )
            if not np.all(np.isfinite(bias)):
                raise InputValidationError(f"layer {self.name} bias contains NaN or Inf")
            bias.flags.writeable = False
            object.__setattr__(self, "bias", bias)
        if self.pool_size is not None and self.pool_size < 1:
            raise InputValidationError(f"pool size must be >= 1, got {self.pool_size}")

    @classmethod
    def conv(
        cls,
        name: str,
        weights: WeightTensor | ArrayLike,
        *,
        stride: int = 1,
        padding: int = 0,
        bias: ArrayLike | None = None,
        compress_exempt: bool = False,
    ) -> LayerSpec:
        """Build a dense convolution layer."""
        tensor = weights if isinstance(weights, WeightTensor) else WeightTensor(np.asarray(weights))
        return cls(
            kind=LayerKind.CONV,
            name=name,
            geometry=ConvGeometry.square(stride, padding),
            weights=tensor,
            bias=None if bias is None else np.asarray(bias),
            compress_exempt=compress_exempt,
        )

    @classmethod
    def fully_connected(
        cls,
        name: str,
        matrix: ArrayLike,
        *,
        bias: ArrayLike | None = None,
        compress_exempt: bool = False,
    ) -> LayerSpec:
        """Build a fully-connected layer from an ``out x in`` matrix."""
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ShapeError(f"fully-connected weights must be 2D, got {matrix.shape}")
        return cls(
            kind=LayerKind.FULLY_CONNECTED,
            name=name,
            weights=WeightTensor(matrix[:, :, None, None]),
            bias=None if bias is None else np.asarray(bias),
            compress_exempt=compress_exempt,
        )

    @classmethod
    def relu(cls, name: str) -> LayerSpec:
        return cls(kind=LayerKind.RELU, name=name)

    @classmethod
    def flatten(cls, name: str) -> LayerSpec:
        return cls(kind=LayerKind.FLATTEN, name=name)

    @classmethod
    def pooling_avg(cls, name: str, pool_size: int | None = None) -> LayerSpec:
        return cls(kind=LayerKind.POOLING_AVG, name=name, pool_size=pool_size)

    @classmethod
    def residual_add(cls, name: str, source: int) -> LayerSpec:
        return cls(kind=LayerKind.RESIDUAL_ADD, name=name, source=source)

    @property
    def weight_bearing(self) -> bool:
        return self.kind.weight_bearing

    @property
    def is_compressed(self) -> bool:
        return self.compressed is not None

    @property
    def dense_shape(self) -> tuple[int, int, int, int]:
        """Return ``(N, C, Kh, Kw)`` of the (original) dense weights."""
        if self.weights is not None:
            return self.weights.shape
        if self.compressed is not None:
            return self.compressed.dense_shape
        raise InputValidationError(f"{self.kind.value} layer {self.name} has no weights")

    @property
    def out_channels(self) -> int:
        return self.dense_shape[0]

    @property
    def in_channels(self) -> int:
        return self.dense_shape[1]

    @property
    def kernel_size(self) -> tuple[int, int]:
        shape = self.dense_shape
        return (shape[2], shape[3])


@dataclass(frozen=True, eq=False)
class ModelGraph:
    """Ordered layer list with its input shape and free-form metadata.

    Attributes
    ----------
    layers : tuple[LayerSpec, ...]
        Layers in evaluation order.
    input_shape : tuple[int, int, int]
        ``channels x height x width`` of the model input.
    metadata : Mapping[str, str]
        Free-form string map stored with the model.
    """

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = tuple(int(dim) for dim in self.input_shape)
        if len(shape) != 3 or min(shape) < 1:
            raise ShapeError(f"input shape must be three positive dims, got {self.input_shape}")
        object.__setattr__(self, "input_shape", shape)
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(
            self,
            "metadata",
            MappingProxyType({str(k): str(v) for k, v in dict(self.metadata).items()}),
        )
        for idx, layer in enumerate(self.layers):
            if layer.kind is LayerKind.RESIDUAL_ADD and not -1 <= layer.source < idx:
                raise InputValidationError(
                    f"residual layer {layer.name} must reference an earlier output, got {layer.source}"
                )
        # Raises ShapeError naming the offending layer.
        self.layer_shapes()

    @classmethod
    def build(
        cls,
        layers: list[LayerSpec],
        input_shape: tuple[int, int, int],
        metadata: Mapping[str, str] | None = None,
        *,
        exempt_ends: bool = True,
    ) -> ModelGraph:
        """Build a graph, marking first and last weight-bearing layers exempt.

        Parameters
        ----------
        layers : list[LayerSpec]
            Layers in evaluation order.
        input_shape : tuple[int, int, int]
            Model input shape.
        metadata : Mapping[str, str] or None, default=None
            Free-form metadata.
        exempt_ends : bool, default=True
            When True the first and last weight-bearing layers get
            ``compress_exempt = True``; explicit flags on other layers are
            kept as given.

        Returns
        -------
        ModelGraph
            Validated model graph.
        """
        layers = list(layers)
        weighted = [idx for idx, layer in enumerate(layers) if layer.weight_bearing]
        if exempt_ends and weighted:
            for idx in {weighted[0], weighted[-1]}:
                layers[idx] = replace(layers[idx], compress_exempt=True)
        return cls(layers=tuple(layers), input_shape=input_shape, metadata=metadata or {})

    def weight_layers(self) -> list[tuple[int, LayerSpec]]:
        """Return ``(index, layer)`` for every weight-bearing layer."""
        return [(idx, layer) for idx, layer in enumerate(self.layers) if layer.weight_bearing]

    def compressible_layers(self) -> list[tuple[int, LayerSpec]]:
        """Return ``(index, layer)`` for weight-bearing layers not exempt."""
        return [(idx, layer) for idx, layer in self.weight_layers() if not layer.compress_exempt]

    @property
    def is_dense(self) -> bool:
        """Return True when no layer carries a compressed payload."""
        return all(not layer.is_compressed for layer in self.layers)

    def with_layer(self, index: int, layer: LayerSpec) -> ModelGraph:
        """Return a copy with layer ``index`` replaced."""
        layers = list(self.layers)
        layers[index] = layer
        return replace(self, layers=tuple(layers))

    def layer_shapes(self) -> list[tuple[int, int, int]]:
        """Propagate shapes and return the output shape of every layer.

        Raises
        ------
        ShapeError
            If a layer cannot accept the shape produced by its predecessor.
        """
        shapes: list[tuple[int, int, int]] = []
        current = self.input_shape
        for idx, layer in enumerate(self.layers):
            try:
                current = _output_shape(layer, current, shapes, self.input_shape)
            except ShapeError as exc:
                raise ShapeError(
                    f"layer {idx} ({layer.name}): {exc}",
                    context={"layer": layer.name, "index": idx},
                ) from exc
            shapes.append(current)
        return shapes

    def output_shape(self) -> tuple[int, int, int]:
        shapes = self.layer_shapes()
        return shapes[-1] if shapes else self.input_shape


def _output_shape(
    layer: LayerSpec,
    current: tuple[int, int, int],
    previous: list[tuple[int, int, int]],
    input_shape: tuple[int, int, int],
) -> tuple[int, int, int]:
    channels, height, width = current
    kind = layer.kind
    if kind.weight_bearing:
        if channels != layer.in_channels:
            raise ShapeError(f"expects {layer.in_channels} input channels, got {channels}")
        kh, kw = layer.kernel_size
        out_h, out_w = layer.geometry.output_size(height, width, kh, kw)
        return (layer.out_channels, out_h, out_w)
    if kind is LayerKind.RELU:
        return current
    if kind is LayerKind.FLATTEN:
        return (channels * height * width, 1, 1)
    if kind is LayerKind.POOLING_AVG:
        if layer.pool_size is None:
            return (channels, 1, 1)
        if layer.pool_size > height or layer.pool_size > width:
            raise ShapeError(f"pool size {layer.pool_size} exceeds input {height}x{width}")
        return (channels, height // layer.pool_size, width // layer.pool_size)
    if kind is LayerKind.RESIDUAL_ADD:
        other = input_shape if layer.source == -1 else previous[layer.source]
        if other != current:
            raise ShapeError(f"cannot add shapes {other} and {current}")
        return current
    raise ShapeError(f"unsupported layer kind {kind}")


__all__ = ["CompressedLayer", "LayerSpec", "ModelGraph"]
