"""Feature-map importance from heat maps and receptive-field masks.

The heat map of an image is the channel sum of the last convolution's
output, upscaled to the image resolution. A feature map's receptive-field
mask keeps the pixels of its upscaled map above a top-quantile threshold.
Importance is the heat summed under the mask; dividing by the mask area
gives the information richness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..engine import forward_dense
from ..enums import LayerKind
from ..errors import InputValidationError, ShapeError, StageError
from ..model import LayerSpec, ModelGraph
from ..tensor import FeatureStack, bilinear_upscale
from ..validation import validate_open_unit_interval

DEFAULT_QUANTILE = 0.005


@dataclass(frozen=True, eq=False)
class HeatMap:
    """Heat map ``H`` at input resolution."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ShapeError(f"heat map must be a non-empty 2D map, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputValidationError("heat map contains NaN or Inf")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))


@dataclass(frozen=True, eq=False)
class ReceptiveMask:
    """Binary receptive-field mask ``M`` and the quantile that produced it."""

    mask: np.ndarray
    quantile: float

    def __post_init__(self) -> None:
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.ndim != 2:
            raise ShapeError(f"mask must be 2D, got {mask.shape}")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.mask.shape[0]), int(self.mask.shape[1]))

    @property
    def area(self) -> int:
        """Return the number of pixels set."""
        return int(self.mask.sum())


class FeatureImportance(NamedTuple):
    """Importance score, mask area and information richness."""

    score: float
    area: int
    richness: float


def last_conv_index(m: ModelGraph) -> int:
    """Return the index of the last ``conv`` layer.

    Raises
    ------
    InputValidationError
        If the model has no convolution layer.
    """
    indices = [idx for idx, layer in enumerate(m.layers) if layer.kind is LayerKind.CONV]
    if not indices:
        raise InputValidationError("model has no convolution layer")
    return indices[-1]


def heat_from_output(output: np.ndarray, height: int, width: int) -> HeatMap:
    """Sum a ``C x h x w`` output over channels and upscale it to ``height x width``."""
    return HeatMap(bilinear_upscale(np.asarray(output, dtype=np.float64).sum(axis=0), height, width))


def heat_map(m: ModelGraph, image: FeatureStack | np.ndarray) -> HeatMap:
    """Compute the heat map of an image.

    Parameters
    ----------
    m : ModelGraph
        Dense model with at least one ``conv`` layer.
    image : FeatureStack or np.ndarray
        Input matching ``m.input_shape``.

    Returns
    -------
    HeatMap
        Channel sum of the last convolution output at input resolution.

    Raises
    ------
    InputValidationError
        If the model has no convolution layer.
    StageError
        If the model is compressed.
    """
    if not m.is_dense:
        raise StageError("heat maps are computed on dense models")
    target = last_conv_index(m)
    captured: dict[str, np.ndarray] = {}

    def observe(idx: int, layer: LayerSpec, layer_input: np.ndarray, output: np.ndarray) -> None:
        if idx == target:
            captured["output"] = output

    forward_dense(m, image, observer=observe)
    _, height, width = m.input_shape
    return heat_from_output(captured["output"], height, width)


def receptive_mask(
    fm: np.ndarray, input_h: int, input_w: int, quantile: float = DEFAULT_QUANTILE
) -> ReceptiveMask:
    """Threshold an upscaled feature map at its top ``quantile``.

    Parameters
    ----------
    fm : np.ndarray
        2D feature map.
    input_h, input_w : int
        Image resolution.
    quantile : float, default=0.005
        Top-quantile level in ``(0, 1)``.

    Returns
    -------
    ReceptiveMask
        Pixels strictly above the ``1 - quantile`` empirical quantile. A
        constant map yields an empty mask.

    Examples
    --------
    >>> import numpy as np
    >>> receptive_mask(np.arange(4.0).reshape(2, 2), 2, 2, 0.5).area
    2
    """
    validate_open_unit_interval(quantile, "quantile")
    upscaled = bilinear_upscale(fm, input_h, input_w)
    threshold = np.quantile(upscaled, 1.0 - quantile)
    return ReceptiveMask(mask=upscaled > threshold, quantile=quantile)


def feature_importance(mask: ReceptiveMask, h: HeatMap) -> FeatureImportance:
    """Return the heat under the mask, the mask area and their ratio.

    Raises
    ------
    ShapeError
        If the mask and heat map sizes differ.

    Examples
    --------
    >>> import numpy as np
    >>> feature_importance(ReceptiveMask(np.zeros((2, 2)), 0.5), HeatMap(np.ones((2, 2))))
    FeatureImportance(score=0.0, area=0, richness=0.0)
    """
    if mask.shape != h.shape:
        raise ShapeError(f"mask {mask.shape} and heat map {h.shape} differ in size")
    area = mask.area
    if area == 0:
        return FeatureImportance(0.0, 0, 0.0)
    score = float(h.values[mask.mask].sum())
    return FeatureImportance(score, area, score / area)


__all__ = [
    "DEFAULT_QUANTILE",
    "HeatMap",
    "ReceptiveMask",
    "FeatureImportance",
    "last_conv_index",
    "heat_from_output",
    "heat_map",
    "receptive_mask",
    "feature_importance",
]
