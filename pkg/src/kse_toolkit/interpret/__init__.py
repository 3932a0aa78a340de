"""Feature-map interpretation and the kernel/feature-map correlation study."""

from __future__ import annotations

from .feature_maps import (
    DEFAULT_QUANTILE,
    FeatureImportance,
    HeatMap,
    ReceptiveMask,
    feature_importance,
    heat_from_output,
    heat_map,
    last_conv_index,
    receptive_mask,
)
from .study import StudyResult, correlation_study, spearman

__all__ = [
    "DEFAULT_QUANTILE",
    "HeatMap",
    "ReceptiveMask",
    "FeatureImportance",
    "heat_map",
    "heat_from_output",
    "last_conv_index",
    "receptive_mask",
    "feature_importance",
    "spearman",
    "StudyResult",
    "correlation_study",
]
