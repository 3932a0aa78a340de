"""Rank correlation between kernel statistics and feature-map statistics."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from pydantic import Field
from scipy.stats import rankdata

from ..analysis import DEFAULT_K_NEIGHBORS, kernel_entropy, kernel_sparsity, knn_distance_matrix
from ..dataset import LabeledDataset
from ..engine import forward_dense
from ..errors import (
    EmptyDatasetError,
    InputValidationError,
    StageError,
    UndefinedCorrelationError,
)
from ..model import LayerSpec, ModelGraph
from ..render import ReportRenderer
from ..structure import BaseStructure, spec_field
from ..tensor import FeatureStack
from ..validation import validate_open_unit_interval
from ..workers import ordered_map
from .feature_maps import (
    DEFAULT_QUANTILE,
    feature_importance,
    heat_from_output,
    last_conv_index,
    receptive_mask,
)


def spearman(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Return Spearman's rank correlation of ``x`` and ``y``.

    Ties get average ranks; the product-moment correlation of the ranks is
    returned, clipped to ``[-1, 1]``.

    Raises
    ------
    InputValidationError
        If the vectors differ in length or have fewer than two entries.
    UndefinedCorrelationError
        If either vector is constant.

    Examples
    --------
    >>> spearman([1, 2, 3, 4], [1, 3, 2, 4])
    0.8
    """
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.size != b.size or a.size < 2:
        raise InputValidationError(
            f"spearman needs two vectors of equal length >= 2, got {a.size} and {b.size}"
        )
    ra = rankdata(a) - (a.size + 1) / 2.0
    rb = rankdata(b) - (b.size + 1) / 2.0
    saa = float(np.dot(ra, ra))
    sbb = float(np.dot(rb, rb))
    if saa == 0.0 or sbb == 0.0:
        raise UndefinedCorrelationError("rank correlation is undefined for a constant vector")
    rho = float(np.dot(ra, rb)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, rho))


class StudyResult(BaseStructure):
    """Per-channel statistics of one layer and their rank correlations."""

    layer_id: str = spec_field("layer_id")
    layer_index: int = spec_field("layer_index")
    quantile: float = spec_field("quantile")
    images: int = spec_field("images", description="Images averaged over.")
    sparsity: list[float] = spec_field("sparsity", description="Kernel sparsity per channel.")
    entropy: list[float] = spec_field("entropy", description="Kernel entropy per channel.")
    mean_area: list[float] = spec_field("mean_area", description="Mean mask area per channel.")
    mean_richness: list[float] = spec_field(
        "mean_richness", description="Mean information richness per channel."
    )
    rho_sparsity: float = spec_field("rho_sparsity")
    rho_richness: float = spec_field("rho_richness")
    notes: list[str] = Field(default_factory=list)

    @property
    def channels(self) -> int:
        return len(self.sparsity)

    def render(self, renderer: ReportRenderer | None = None, *, detail: bool = True) -> str:
        """Render the study as text."""
        return (renderer or ReportRenderer()).render(
            "study_report.jinja", {"study": self, "detail": detail}
        )


def _resolve_layer(m: ModelGraph, layer: int | str) -> int:
    for idx, target_spec in enumerate(m.layers):
        if (isinstance(layer, int) and idx == layer) or target_spec.name == layer:
            if not target_spec.weight_bearing:
                raise InputValidationError(f"layer {target_spec.name} carries no weights")
            return idx
    raise InputValidationError(f"model has no layer {layer!r}")


def _image_arrays(images: LabeledDataset | Sequence[FeatureStack | np.ndarray]) -> list[np.ndarray]:
    if isinstance(images, LabeledDataset):
        return [image for image, _ in images]
    return [image.data if isinstance(image, FeatureStack) else np.asarray(image) for image in images]


def correlation_study(
    m: ModelGraph,
    images: LabeledDataset | Sequence[FeatureStack | np.ndarray],
    layer: int | str,
    quantile: float = DEFAULT_QUANTILE,
    *,
    k: int = DEFAULT_K_NEIGHBORS,
    worker_count: int | None = 1,
) -> StudyResult:
    """Correlate kernel statistics with the input feature maps they read.

    For every input channel ``c`` of ``layer`` the receptive-field mask of
    the feature map ``X_c`` is measured against the image's heat map; mask
    area and richness are averaged over the images.

    Parameters
    ----------
    m : ModelGraph
        Dense model.
    images : LabeledDataset or Sequence[FeatureStack or np.ndarray]
        Images matching ``m.input_shape``; labels are ignored.
    layer : int or str
        Index or name of a weight-bearing layer.
    quantile : float, default=0.005
        Top-quantile level of the masks.
    k : int, default=5
        Neighbour count of the kernel entropy.
    worker_count : int or None, default=1
        Threads for the per-image fan-out.

    Returns
    -------
    StudyResult
        ``rho_sparsity = spearman(s_c, mean area)`` and
        ``rho_richness = spearman(e_c, mean richness)``.

    Raises
    ------
    EmptyDatasetError
        If no images are given.
    UndefinedCorrelationError
        If a compared vector is constant.
    """
    if not m.is_dense:
        raise StageError("the correlation study runs on dense models")
    validate_open_unit_interval(quantile, "quantile")
    arrays = _image_arrays(images)
    if not arrays:
        raise EmptyDatasetError("correlation study needs at least one image")
    target = _resolve_layer(m, layer)
    target_spec = m.layers[target]
    assert target_spec.weights is not None
    heat_index = last_conv_index(m)
    _, height, width = m.input_shape

    def per_image(image: np.ndarray) -> np.ndarray:
        captured: dict[str, np.ndarray] = {}

        def observe(idx: int, _: LayerSpec, layer_input: np.ndarray, output: np.ndarray) -> None:
            if idx == target:
                captured["input"] = layer_input
            if idx == heat_index:
                captured["heat"] = output

        forward_dense(m, image, observer=observe)
        heat = heat_from_output(captured["heat"], height, width)
        stats = np.zeros((target_spec.in_channels, 2), dtype=np.float64)
        for c, feature_map in enumerate(captured["input"]):
            importance = feature_importance(receptive_mask(feature_map, height, width, quantile), heat)
            stats[c] = (importance.area, importance.richness)
        return stats

    totals = np.zeros((target_spec.in_channels, 2), dtype=np.float64)
    for stats in ordered_map(per_image, arrays, worker_count=worker_count):
        totals += stats
    means = totals / len(arrays)

    weights = target_spec.weights
    sparsity = [kernel_sparsity(weights, c) for c in range(weights.in_channels)]
    entropy = [kernel_entropy(knn_distance_matrix(weights, c, k)) for c in range(weights.in_channels)]
    return StudyResult(
        layer_id=target_spec.name,
        layer_index=target,
        quantile=quantile,
        images=len(arrays),
        sparsity=sparsity,
        entropy=entropy,
        mean_area=means[:, 0].tolist(),
        mean_richness=means[:, 1].tolist(),
        rho_sparsity=spearman(sparsity, means[:, 0]),
        rho_richness=spearman(entropy, means[:, 1]),
    )


__all__ = ["spearman", "StudyResult", "correlation_study"]
