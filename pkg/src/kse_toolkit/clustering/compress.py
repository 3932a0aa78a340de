"""Layer and model compression from analysis reports."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import replace

import numpy as np

from ..analysis import KseReport
from ..errors import ConfigurationError, InputValidationError, KseToolkitError, LayerError, ShapeError, StageError
from ..model import CompressedLayer, LayerSpec, ModelGraph
from ..tensor import WeightTensor
from ..utils import log
from ..workers import ordered_map
from .config import CompressionConfig
from .kmeans import kernel_count, kmeans_kernels

CONFIG_METADATA_PREFIX = "kse."


def _compress_channel(
    w: WeightTensor, c: int, q_c: int, cfg: CompressionConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(centroids q_c x Kh x Kw, 1-based index column)`` for one channel."""
    n, _, kh, kw = w.shape
    kernels = w.channel_slice(c)
    if q_c == 0:
        return np.zeros((0, kh, kw), dtype=np.float32), np.zeros(n, dtype=np.int32)
    if q_c == n:
        # verbatim copy keeps the layer lossless
        return kernels.copy(), np.arange(1, n + 1, dtype=np.int32)
    result = kmeans_kernels(kernels.reshape(n, -1), q_c, cfg)
    centroids = result.centroids.reshape(q_c, kh, kw).astype(np.float32)
    return centroids, result.assignments


def compress_layer(
    w: WeightTensor,
    report: KseReport,
    cfg: CompressionConfig,
    *,
    worker_count: int | None = 1,
) -> CompressedLayer:
    """Cluster every input channel of one layer to its kernel budget.

    Parameters
    ----------
    w : WeightTensor
        Dense weights ``N x C x Kh x Kw``.
    report : KseReport
        Analysis of ``w``; its indicator drives the budgets.
    cfg : CompressionConfig
        Budget rule and k-means settings.
    worker_count : int or None, default=1
        Threads for the per-channel fan-out.

    Returns
    -------
    CompressedLayer
        ``q_c = 0`` channels are pruned, ``q_c = N`` channels keep their
        kernels verbatim, the rest are clustered with k-means.

    Raises
    ------
    ShapeError
        If the report does not describe a layer of ``w``'s shape.
    BudgetError
        Propagated from k-means.
    """
    if report.channels != w.in_channels or report.n_filters != w.n_filters:
        raise ShapeError(
            f"report {report.layer_id} describes {report.n_filters}x{report.channels} "
            f"but the weights are {w.n_filters}x{w.in_channels}",
            context={"layer": report.layer_id},
        )
    budgets = [kernel_count(v, w.n_filters, cfg) for v in report.indicator]
    channels = ordered_map(
        lambda c: _compress_channel(w, c, budgets[c], cfg),
        list(range(w.in_channels)),
        worker_count=worker_count,
    )
    table = np.stack([column for _, column in channels], axis=1)
    return CompressedLayer(
        q=np.asarray(budgets, dtype=np.int64),
        centroids=tuple(centroids for centroids, _ in channels),
        index_table=table,
        n_filters=w.n_filters,
        kernel_h=w.kernel_h,
        kernel_w=w.kernel_w,
    )


def compress_model(
    m: ModelGraph,
    reports: Sequence[KseReport],
    cfg: CompressionConfig,
    *,
    worker_count: int | None = 1,
) -> ModelGraph:
    """Replace every compressible layer's dense payload with a compressed one.

    Parameters
    ----------
    m : ModelGraph
        Dense model.
    reports : Sequence[KseReport]
        One report per compressible layer, matched by layer name.
    cfg : CompressionConfig
        Budget rule and k-means settings.
    worker_count : int or None, default=1
        Threads for the per-channel fan-out inside each layer.

    Returns
    -------
    ModelGraph
        Model with compressed payloads; exempt layers are untouched and the
        configuration is echoed into the metadata under ``kse.*`` keys.

    Raises
    ------
    StageError
        If a compressible layer is already compressed.
    InputValidationError
        If the reports do not match the compressible layers one to one.
    ConfigurationError
        If a report was computed with a different indicator than ``cfg.indicator``.
    LayerError
        If compressing a layer fails; the cause is chained.
    """
    targets = m.compressible_layers()
    already = [layer.name for _, layer in targets if layer.is_compressed]
    if already:
        raise StageError(
            f"model is already compressed (layers {', '.join(already)})",
            context={"layers": already},
        )
    by_name = {report.layer_id: report for report in reports}
    expected = {layer.name for _, layer in targets}
    missing = sorted(expected - set(by_name))
    unknown = sorted(set(by_name) - expected)
    if missing or unknown:
        raise InputValidationError(
            f"reports do not match the compressible layers (missing {missing}, unknown {unknown})",
            context={"missing": missing, "unknown": unknown},
        )
    mixed = sorted(name for name, report in by_name.items() if report.indicator_kind != cfg.indicator)
    if mixed:
        raise ConfigurationError(
            f"reports for {', '.join(mixed)} were not computed with indicator {cfg.indicator.value}",
            context={"layers": mixed, "indicator": cfg.indicator.value},
        )

    if not targets:
        return m

    compressed = m
    for idx, layer in targets:
        assert layer.weights is not None
        try:
            payload = compress_layer(
                layer.weights, by_name[layer.name], cfg, worker_count=worker_count
            )
        except KseToolkitError as exc:
            raise LayerError(
                f"compression of layer {idx} ({layer.name}) failed: {exc}",
                context={"layer": layer.name, "index": idx},
            ) from exc
        kept = payload.total_kernels
        total = payload.n_filters * payload.in_channels
        log(f"Compressed layer {layer.name}: {kept}/{total} kernels kept", level=logging.INFO)
        if kept == 0:
            log(f"Layer {layer.name} is pruned entirely", level=logging.WARNING)
        compressed = compressed.with_layer(idx, _with_payload(layer, payload))

    metadata = dict(m.metadata)
    metadata.update({CONFIG_METADATA_PREFIX + key: str(value) for key, value in cfg.echo().items()})
    return replace(compressed, metadata=metadata)


def _with_payload(layer: LayerSpec, payload: CompressedLayer) -> LayerSpec:
    return replace(layer, weights=None, compressed=payload)


__all__ = ["compress_layer", "compress_model", "CONFIG_METADATA_PREFIX"]
