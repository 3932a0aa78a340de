"""Model-level ratio reports and the granularity sweep."""

from __future__ import annotations

from collections.abc import Sequence

from pydantic import Field

from ..analysis import KseReport
from ..clustering import CONFIG_METADATA_PREFIX, CompressionConfig, compress_model
from ..engine import count_flops
from ..errors import ShapeError
from ..model import LayerSpec, ModelGraph, compressed_section_bytes
from ..render import ReportRenderer
from ..structure import BaseStructure, spec_field
from .ratios import (
    BITS_PER_PARAM,
    acceleration_ratio,
    compressed_bits,
    compressed_params,
    compression_ratio,
)

BIAS_NOTE = "Biases are excluded from parameter counts and ratios on both sides."
EXEMPT_NOTE = "Uncompressed layers enter the totals with their dense size on both sides."


class LayerRatio(BaseStructure):
    """Ratios and counts of one weight-bearing layer."""

    layer_id: str = spec_field("layer_id")
    layer_index: int = spec_field("layer_index")
    compressed: bool = spec_field("compressed")
    kernels_total: int = spec_field("kernels_total", description="N * C.")
    kernels_kept: int = spec_field("kernels_kept", description="sum(q_c).")
    params_dense: int = spec_field("params_dense", description="N * C * Kh * Kw.")
    params_compressed: float = spec_field(
        "params_compressed", description="Equivalent 32-bit parameters incl. index bits."
    )
    params_compressed_bits: float = spec_field("params_compressed_bits")
    r_comp: float = spec_field("r_comp")
    flops_dense: int = spec_field("flops_dense")
    flops_compressed: int = spec_field("flops_compressed")
    flops_strict: int = spec_field(
        "flops_strict", description="Compressed count plus channel-fusion additions."
    )
    r_acce: float = spec_field("r_acce")
    on_disk_bytes: int = spec_field("on_disk_bytes", description="Weight section size on disk.")


class RatioTotals(BaseStructure):
    """Model-wide sums and the ratios of those sums."""

    params_dense: int
    params_compressed: float
    params_compressed_bits: float
    r_comp: float
    flops_dense: int
    flops_compressed: int
    flops_strict: int
    r_acce: float
    on_disk_bytes: int


class RatioReport(BaseStructure):
    """Per-layer and model-level compression and acceleration ratios."""

    input_shape: tuple[int, int, int]
    layers: list[LayerRatio] = Field(default_factory=list)
    totals: RatioTotals
    config: dict[str, str] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)

    def layer(self, name: str) -> LayerRatio:
        """Return the entry of the layer called ``name``."""
        for entry in self.layers:
            if entry.layer_id == name:
                return entry
        raise KeyError(name)

    def render(self, renderer: ReportRenderer | None = None) -> str:
        """Render the FLOPs and #Param text table."""
        return (renderer or ReportRenderer()).render("ratio_report.jinja", {"report": self})


def _same_architecture(dense: LayerSpec, other: LayerSpec) -> bool:
    if (dense.kind, dense.name, dense.geometry) != (other.kind, other.name, other.geometry):
        return False
    if dense.source != other.source or dense.pool_size != other.pool_size:
        return False
    return not dense.weight_bearing or dense.dense_shape == other.dense_shape


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else float("inf")


def model_report(
    m_dense: ModelGraph,
    m_compressed: ModelGraph,
    input_shape: tuple[int, int, int] | None = None,
) -> RatioReport:
    """Compare a dense model with its compressed counterpart.

    Parameters
    ----------
    m_dense : ModelGraph
        Reference dense model.
    m_compressed : ModelGraph
        Model sharing the architecture; dense layers count at dense size.
    input_shape : tuple[int, int, int] or None, default=None
        Input shape for the FLOP counts; defaults to the model's.

    Returns
    -------
    RatioReport
        Per-layer rows and totals computed from summed numerators and
        denominators.

    Raises
    ------
    ShapeError
        If the two models differ in architecture.
    """
    if len(m_dense.layers) != len(m_compressed.layers) or not all(
        _same_architecture(a, b) for a, b in zip(m_dense.layers, m_compressed.layers)
    ):
        raise ShapeError("dense and compressed models do not share an architecture")
    shape = m_dense.input_shape if input_shape is None else tuple(input_shape)
    flops_dense = count_flops(m_dense, shape)
    flops_actual = count_flops(m_compressed, shape)

    rows: list[LayerRatio] = []
    for (idx, layer), dense_flops, actual_flops in zip(
        m_compressed.weight_layers(), flops_dense.layers, flops_actual.layers
    ):
        n, c_in, kh, kw = layer.dense_shape
        params_dense = n * c_in * kh * kw
        payload = layer.compressed
        if payload is not None:
            kept = payload.total_kernels
            params = compressed_params(payload)
            bits = compressed_bits(payload)
            r_comp = compression_ratio(payload)
            r_acce = acceleration_ratio(payload)
            on_disk = compressed_section_bytes(payload)
        else:
            kept = n * c_in
            params = float(params_dense)
            bits = float(params_dense * BITS_PER_PARAM)
            r_comp = r_acce = 1.0
            on_disk = params_dense * 4
        rows.append(
            LayerRatio(
                layer_id=layer.name,
                layer_index=idx,
                compressed=payload is not None,
                kernels_total=n * c_in,
                kernels_kept=kept,
                params_dense=params_dense,
                params_compressed=params,
                params_compressed_bits=bits,
                r_comp=r_comp,
                flops_dense=dense_flops.multiply_adds,
                flops_compressed=actual_flops.multiply_adds,
                flops_strict=actual_flops.strict,
                r_acce=r_acce,
                on_disk_bytes=on_disk,
            )
        )

    params_dense_total = sum(row.params_dense for row in rows)
    params_total = sum(row.params_compressed for row in rows)
    flops_dense_total = sum(row.flops_dense for row in rows)
    flops_total = sum(row.flops_compressed for row in rows)
    totals = RatioTotals(
        params_dense=params_dense_total,
        params_compressed=params_total,
        params_compressed_bits=sum(row.params_compressed_bits for row in rows),
        r_comp=_ratio(params_dense_total, params_total),
        flops_dense=flops_dense_total,
        flops_compressed=flops_total,
        flops_strict=sum(row.flops_strict for row in rows),
        r_acce=_ratio(flops_dense_total, flops_total),
        on_disk_bytes=sum(row.on_disk_bytes for row in rows),
    )
    config = {
        key[len(CONFIG_METADATA_PREFIX) :]: value
        for key, value in m_compressed.metadata.items()
        if key.startswith(CONFIG_METADATA_PREFIX)
    }
    return RatioReport(
        input_shape=shape,
        layers=rows,
        totals=totals,
        config=config,
        notes=[BIAS_NOTE, EXEMPT_NOTE],
    )


def granularity_sweep(
    m: ModelGraph,
    reports: Sequence[KseReport],
    granularities: Sequence[int],
    cfg: CompressionConfig | None = None,
    input_shape: tuple[int, int, int] | None = None,
    *,
    worker_count: int | None = 1,
) -> list[RatioReport]:
    """Compress ``m`` once per granularity and report each result.

    Parameters
    ----------
    m : ModelGraph
        Dense model.
    reports : Sequence[KseReport]
        Analysis of ``m``.
    granularities : Sequence[int]
        Values of ``G`` to try, each ``>= 2``.
    cfg : CompressionConfig or None, default=None
        Base settings; only ``granularity`` changes between runs.
    input_shape : tuple[int, int, int] or None, default=None
        Input shape for the FLOP counts.
    worker_count : int or None, default=1
        Threads for the per-channel clustering.

    Returns
    -------
    list[RatioReport]
        One report per granularity, in the given order.
    """
    base = (cfg or CompressionConfig()).model_dump()
    results = []
    for granularity in granularities:
        settings = CompressionConfig(**{**base, "granularity": granularity})
        compressed = compress_model(m, reports, settings, worker_count=worker_count)
        results.append(model_report(m, compressed, input_shape))
    return results


def render_sweep(reports: Sequence[RatioReport], renderer: ReportRenderer | None = None) -> str:
    """Render a granularity sweep as one text table."""
    return (renderer or ReportRenderer()).render("sweep_report.jinja", {"reports": list(reports)})


__all__ = [
    "LayerRatio",
    "RatioTotals",
    "RatioReport",
    "model_report",
    "granularity_sweep",
    "render_sweep",
    "BIAS_NOTE",
]
