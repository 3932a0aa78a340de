"""Kernel sparsity, kernel entropy and the KSE channel indicator.

For every input channel ``c`` of a layer with weights ``N x C x Kh x Kw``
the analysis looks only at the ``N`` kernels ``W_{n,c}``:

* sparsity ``s_c`` is the l1 norm of the whole slice;
* entropy ``e_c`` is the base-2 Shannon entropy of the normalized kNN
  density metric of the slice's kernels;
* the indicator ``v_c = sqrt(s / (1 + alpha * e))`` combines both after
  per-layer min-max normalization and is rescaled to ``[0, 1]`` again.

All functions are pure; :func:`analyze_model` fans out one task per layer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import field_validator, model_validator
from scipy.spatial.distance import cdist

from ..enums import IndicatorKind
from ..errors import (
    DegenerateLayerError,
    InputValidationError,
    KseToolkitError,
    LayerError,
    StageError,
)
from ..model import LayerSpec, ModelGraph
from ..structure import BaseStructure, spec_field
from ..tensor import WeightTensor
from ..utils import log
from ..workers import ordered_map

DEFAULT_K_NEIGHBORS = 5
DEFAULT_ALPHA = 1.0


@dataclass(frozen=True, eq=False)
class NeighborMatrix:
    """kNN distance matrix ``A_c`` of one channel's kernels.

    Attributes
    ----------
    values : np.ndarray
        ``N x N`` float64 matrix. Entry ``(i, j)`` is the Euclidean distance
        between flattened kernels ``i`` and ``j`` when ``j`` is one of the
        ``k`` nearest neighbours of ``i``, else 0. The diagonal is 0.
    k : int
        Effective neighbour count ``min(k, N - 1)``.
    """

    values: np.ndarray
    k: int

    @property
    def size(self) -> int:
        return int(self.values.shape[0])


class KseReport(BaseStructure):
    """Per-layer analysis record.

    One record per compressible layer; the line-oriented report file written
    by ``analyze`` and read by ``compress`` is a sequence of these.
    """

    layer_id: str = spec_field("layer_id", description="Layer name.")
    layer_index: int = spec_field("layer_index", description="Position in the model graph.", default=-1)
    n_filters: int = spec_field("n_filters", description="Number of filters N.", ge=1)
    sparsity_raw: list[float] = spec_field("sparsity_raw", description="Kernel sparsity s_c.")
    entropy_raw: list[float] = spec_field("entropy_raw", description="Kernel entropy e_c.")
    sparsity_norm: list[float] = spec_field("sparsity_norm")
    entropy_norm: list[float] = spec_field("entropy_norm")
    indicator: list[float] = spec_field(
        "indicator", description="Channel indicator v_c rescaled to [0, 1]."
    )
    alpha: float = spec_field("alpha", ge=0.0)
    k_neighbors: int = spec_field("k_neighbors", description="Requested neighbour count.", ge=1)
    indicator_kind: IndicatorKind = spec_field("indicator_kind", default=IndicatorKind.KSE)

    @field_validator("sparsity_norm", "entropy_norm", "indicator")
    @classmethod
    def _unit_interval(cls, values: list[float]) -> list[float]:
        if any(not 0.0 <= value <= 1.0 for value in values):
            raise ValueError("normalized values must lie in [0, 1]")
        return values

    @model_validator(mode="after")
    def _equal_lengths(self) -> KseReport:
        lengths = {
            len(self.sparsity_raw),
            len(self.entropy_raw),
            len(self.sparsity_norm),
            len(self.entropy_norm),
            len(self.indicator),
        }
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError("report vectors must be non-empty and of equal length")
        return self

    @property
    def channels(self) -> int:
        """Return the number of input channels ``C``."""
        return len(self.indicator)


def _check_channel(w: WeightTensor, c: int) -> None:
    if not 0 <= c < w.in_channels:
        raise InputValidationError(f"channel {c} out of range for {w.in_channels} input channels")


def kernel_sparsity(w: WeightTensor, c: int) -> float:
    """Return ``s_c``, the l1 norm of all kernels attached to channel ``c``.

    Examples
    --------
    >>> import numpy as np
    >>> kernel_sparsity(WeightTensor(np.array([3.0, -4.0]).reshape(2, 1, 1, 1)), 0)
    7.0
    """
    _check_channel(w, c)
    return float(np.abs(w.channel_slice(c).astype(np.float64)).sum())


def knn_distance_matrix(w: WeightTensor, c: int, k: int = DEFAULT_K_NEIGHBORS) -> NeighborMatrix:
    """Build the kNN distance matrix of channel ``c``.

    Parameters
    ----------
    w : WeightTensor
        Layer weights.
    c : int
        Input channel.
    k : int, default=5
        Requested neighbour count; clamped to ``N - 1``.

    Returns
    -------
    NeighborMatrix
        Matrix with at most ``k`` nonzero entries per row.

    Raises
    ------
    DegenerateLayerError
        If the layer has fewer than two filters.
    InputValidationError
        If ``c`` is out of range or ``k < 1``.
    """
    _check_channel(w, c)
    n = w.n_filters
    if n < 2:
        raise DegenerateLayerError(f"kernel entropy needs at least 2 filters, got {n}")
    if k < 1:
        raise InputValidationError(f"k must be >= 1, got {k}")
    k_eff = min(k, n - 1)
    flat = w.channel_slice(c).reshape(n, -1).astype(np.float64)
    distances = cdist(flat, flat, metric="euclidean")
    ranking = distances.copy()
    np.fill_diagonal(ranking, np.inf)
    # stable sort keeps the lower index first among equal distances
    neighbours = np.argsort(ranking, axis=1, kind="stable")[:, :k_eff]
    values = np.zeros((n, n), dtype=np.float64)
    rows = np.arange(n)[:, None]
    values[rows, neighbours] = distances[rows, neighbours]
    return NeighborMatrix(values=values, k=k_eff)


def density_metric(a: NeighborMatrix) -> np.ndarray:
    """Return the row sums ``dm_i`` of the neighbour matrix."""
    # sorted rows make the sum independent of kernel order
    return np.sort(a.values, axis=1).sum(axis=1)


def kernel_entropy(a: NeighborMatrix) -> float:
    """Return the base-2 entropy of the normalized density metric.

    Identical kernels (``sum(dm) == 0``) give ``log2 N``.

    Examples
    --------
    >>> import numpy as np
    >>> a = NeighborMatrix(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 9.0, 0.0]]), k=1)
    >>> round(kernel_entropy(a), 4)
    0.8659
    """
    n = a.size
    upper = math.log2(n)
    dm = density_metric(a)
    total = math.fsum(dm.tolist())
    if total == 0.0:
        return upper
    p = np.sort(dm[dm > 0] / total)
    entropy = -math.fsum((p * np.log2(p)).tolist())
    return min(max(entropy, 0.0), upper)


def minmax_normalize(v: np.ndarray | list[float]) -> np.ndarray:
    """Rescale a vector to ``[0, 1]``; a constant vector maps to all ones.

    Examples
    --------
    >>> minmax_normalize([0.0, 5.0, 10.0]).tolist()
    [0.0, 0.5, 1.0]
    >>> minmax_normalize([3.0, 3.0, 3.0]).tolist()
    [1.0, 1.0, 1.0]
    """
    values = np.asarray(v, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise InputValidationError("cannot normalize an empty vector")
    if not np.all(np.isfinite(values)):
        raise InputValidationError("cannot normalize a vector with NaN or Inf")
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.ones_like(values)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def kse_indicator(s_norm: float, e_norm: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Return ``sqrt(s_norm / (1 + alpha * e_norm))``.

    Examples
    --------
    >>> round(kse_indicator(1.0, 1.0, 1.0), 4)
    0.7071
    """
    if alpha < 0:
        raise InputValidationError(f"alpha must be >= 0, got {alpha}")
    return math.sqrt(s_norm / (1.0 + alpha * e_norm))


def _raw_indicator(
    s_norm: np.ndarray, e_norm: np.ndarray, alpha: float, kind: IndicatorKind
) -> np.ndarray:
    if kind is IndicatorKind.SPARSITY:
        return s_norm
    if kind is IndicatorKind.ENTROPY:
        return 1.0 - e_norm
    return np.array([kse_indicator(s, e, alpha) for s, e in zip(s_norm, e_norm)])


def analyze_layer(
    w: WeightTensor,
    k: int = DEFAULT_K_NEIGHBORS,
    alpha: float = DEFAULT_ALPHA,
    *,
    indicator: IndicatorKind | str = IndicatorKind.KSE,
    layer_id: str = "layer",
    layer_index: int = -1,
) -> KseReport:
    """Score every input channel of one layer.

    Parameters
    ----------
    w : WeightTensor
        Dense weights ``N x C x Kh x Kw`` with ``N >= 2``.
    k : int, default=5
        Neighbour count for the entropy.
    alpha : float, default=1.0
        Entropy weight in the indicator.
    indicator : IndicatorKind or str, default=IndicatorKind.KSE
        Which indicator fills ``KseReport.indicator``.
    layer_id : str, default="layer"
        Name stored in the report.
    layer_index : int, default=-1
        Model position stored in the report.

    Returns
    -------
    KseReport
        Raw and normalized sparsity and entropy plus the indicator.

    Raises
    ------
    DegenerateLayerError
        If ``N < 2``.
    """
    kind = IndicatorKind(indicator)
    if alpha < 0:
        raise InputValidationError(f"alpha must be >= 0, got {alpha}")
    sparsity = np.array([kernel_sparsity(w, c) for c in range(w.in_channels)])
    entropy = np.array(
        [kernel_entropy(knn_distance_matrix(w, c, k)) for c in range(w.in_channels)]
    )
    s_norm = minmax_normalize(sparsity)
    e_norm = minmax_normalize(entropy)
    v = minmax_normalize(_raw_indicator(s_norm, e_norm, alpha, kind))
    return KseReport(
        layer_id=layer_id,
        layer_index=layer_index,
        n_filters=w.n_filters,
        sparsity_raw=sparsity.tolist(),
        entropy_raw=entropy.tolist(),
        sparsity_norm=s_norm.tolist(),
        entropy_norm=e_norm.tolist(),
        indicator=v.tolist(),
        alpha=float(alpha),
        k_neighbors=k,
        indicator_kind=kind,
    )


def analyze_model(
    m: ModelGraph,
    k: int = DEFAULT_K_NEIGHBORS,
    alpha: float = DEFAULT_ALPHA,
    *,
    indicator: IndicatorKind | str = IndicatorKind.KSE,
    worker_count: int | None = 1,
) -> list[KseReport]:
    """Analyze every compressible layer of a dense model.

    Parameters
    ----------
    m : ModelGraph
        Dense model.
    k : int, default=5
        Neighbour count.
    alpha : float, default=1.0
        Entropy weight.
    indicator : IndicatorKind or str, default=IndicatorKind.KSE
        Indicator variant.
    worker_count : int or None, default=1
        Threads used for the per-layer fan-out; None uses every CPU.

    Returns
    -------
    list[KseReport]
        One report per non-exempt weight-bearing layer, in layer order.

    Raises
    ------
    StageError
        If a compressible layer is already compressed.
    LayerError
        If analysing a layer fails; the cause is chained.
    """
    targets = m.compressible_layers()
    compressed = [layer.name for _, layer in targets if layer.is_compressed]
    if compressed:
        raise StageError(
            f"analysis needs dense weights; compressed layers: {', '.join(compressed)}",
            context={"layers": compressed},
        )

    def run(target: tuple[int, LayerSpec]) -> KseReport:
        idx, layer = target
        assert layer.weights is not None
        try:
            report = analyze_layer(
                layer.weights,
                k,
                alpha,
                indicator=indicator,
                layer_id=layer.name,
                layer_index=idx,
            )
        except KseToolkitError as exc:
            raise LayerError(
                f"analysis of layer {idx} ({layer.name}) failed: {exc}",
                context={"layer": layer.name, "index": idx},
            ) from exc
        log(f"Analyzed layer {layer.name}: {report.channels} channels", level=logging.DEBUG)
        return report

    return ordered_map(run, targets, worker_count=worker_count)


def write_reports(reports: list[KseReport], path: str | Path) -> str:
    """Write analysis reports, one JSON record per line."""
    return KseReport.write_records(reports, path)


def read_reports(path: str | Path) -> list[KseReport]:
    """Read a report file written by :func:`write_reports`."""
    return KseReport.read_records(path)


__all__ = [
    "NeighborMatrix",
    "KseReport",
    "kernel_sparsity",
    "knn_distance_matrix",
    "density_metric",
    "kernel_entropy",
    "minmax_normalize",
    "kse_indicator",
    "analyze_layer",
    "analyze_model",
    "write_reports",
    "read_reports",
]
