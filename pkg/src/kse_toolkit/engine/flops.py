"""Multiply-add accounting for dense and compressed layers."""

from __future__ import annotations

from dataclasses import replace

from pydantic import Field

from ..model import ModelGraph
from ..structure import BaseStructure, spec_field


class LayerFlops(BaseStructure):
    """Multiply-add counts of one weight-bearing layer.

    ``multiply_adds`` drives the acceleration ratio: ``N*C*Hout*Wout*Kh*Kw``
    for a dense layer and ``sum(q_c)*Hout*Wout*Kh*Kw`` for a compressed one.
    ``strict`` adds the channel-fusion additions the ratio leaves out.
    """

    layer_id: str = spec_field("layer_id")
    layer_index: int = spec_field("layer_index")
    compressed: bool = spec_field("compressed", default=False)
    dense_multiply_adds: int = spec_field("dense_multiply_adds", ge=0)
    multiply_adds: int = spec_field("multiply_adds", ge=0)
    strict: int = spec_field("strict", ge=0)


class FlopCount(BaseStructure):
    """Per-layer and total multiply-add counts of a model."""

    layers: list[LayerFlops] = Field(default_factory=list)

    @property
    def multiply_adds(self) -> int:
        """Return the total count used for the acceleration ratio."""
        return sum(layer.multiply_adds for layer in self.layers)

    @property
    def dense_multiply_adds(self) -> int:
        return sum(layer.dense_multiply_adds for layer in self.layers)

    @property
    def strict(self) -> int:
        return sum(layer.strict for layer in self.layers)

    def layer(self, name: str) -> LayerFlops:
        """Return the entry of the layer called ``name``."""
        for entry in self.layers:
            if entry.layer_id == name:
                return entry
        raise KeyError(name)


def count_flops(m: ModelGraph, input_shape: tuple[int, int, int] | None = None) -> FlopCount:
    """Count multiply-adds of every weight-bearing layer.

    Parameters
    ----------
    m : ModelGraph
        Dense or compressed model.
    input_shape : tuple[int, int, int] or None, default=None
        Input shape to propagate; defaults to ``m.input_shape``.

    Returns
    -------
    FlopCount
        One entry per weight-bearing layer in model order.

    Raises
    ------
    ShapeError
        If ``input_shape`` does not propagate through the model.

    Examples
    --------
    >>> import numpy as np
    >>> from kse_toolkit.model import LayerSpec
    >>> m = ModelGraph.build([LayerSpec.conv("c", np.ones((1, 1, 1, 1)))], (1, 1, 1))
    >>> count_flops(m).multiply_adds
    1
    """
    graph = m if input_shape is None else replace(m, input_shape=tuple(input_shape))
    shapes = graph.layer_shapes()
    entries: list[LayerFlops] = []
    for idx, layer in graph.weight_layers():
        n, c_in, kh, kw = layer.dense_shape
        _, out_h, out_w = shapes[idx]
        per_kernel = out_h * out_w * kh * kw
        dense = n * c_in * per_kernel
        if layer.compressed is not None:
            payload = layer.compressed
            actual = payload.total_kernels * per_kernel
            active = int((payload.q > 0).sum())
            strict = actual + n * out_h * out_w * max(0, active - 1)
        else:
            actual = strict = dense
        entries.append(
            LayerFlops(
                layer_id=layer.name,
                layer_index=idx,
                compressed=layer.compressed is not None,
                dense_multiply_adds=dense,
                multiply_adds=actual,
                strict=strict,
            )
        )
    return FlopCount(layers=entries)


__all__ = ["LayerFlops", "FlopCount", "count_flops"]
