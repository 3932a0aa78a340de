"""Layer and indicator enumerations."""

from __future__ import annotations

from typing import Any

from .base import CrosswalkJSONEnum


class LayerKind(CrosswalkJSONEnum):
    """Kinds of layers a :class:`~kse_toolkit.model.ModelGraph` may hold.

    Attributes
    ----------
    CONV : str
        2D convolution with a dense or compressed payload.
    FULLY_CONNECTED : str
        Fully-connected layer stored as a 1x1 convolution.
    RESIDUAL_ADD : str
        Elementwise sum of the running output and an earlier output.
    RELU : str
        Elementwise rectifier.
    POOLING_AVG : str
        Non-overlapping average pooling (global when no size is given).
    FLATTEN : str
        Reshape ``C x H x W`` into ``(C*H*W) x 1 x 1``.
    """

    CONV = "conv"
    FULLY_CONNECTED = "fully-connected"
    RESIDUAL_ADD = "residual-add"
    RELU = "relu"
    POOLING_AVG = "pooling-avg"
    FLATTEN = "flatten"

    @classmethod
    def CROSSWALK(cls) -> dict[str, dict[str, Any]]:
        """Return metadata describing each layer kind."""
        return {
            "CONV": {"weight_bearing": True},
            "FULLY_CONNECTED": {"weight_bearing": True},
            "RESIDUAL_ADD": {"weight_bearing": False},
            "RELU": {"weight_bearing": False},
            "POOLING_AVG": {"weight_bearing": False},
            "FLATTEN": {"weight_bearing": False},
        }

    @property
    def weight_bearing(self) -> bool:
        """Return whether layers of this kind carry a weight payload."""
        return bool(self.meta("weight_bearing"))


class IndicatorKind(CrosswalkJSONEnum):
    """Channel-importance indicator used to derive kernel budgets.

    Attributes
    ----------
    KSE : str
        ``sqrt(s / (1 + alpha * e))`` on normalized sparsity and entropy.
    SPARSITY : str
        Normalized kernel sparsity alone.
    ENTROPY : str
        One minus normalized kernel entropy (low entropy = rich channel).
    """

    KSE = "kse"
    SPARSITY = "sparsity"
    ENTROPY = "entropy"

    @classmethod
    def CROSSWALK(cls) -> dict[str, dict[str, Any]]:
        """Return metadata describing each indicator."""
        return {
            "KSE": {"description": "kernel sparsity and entropy combined"},
            "SPARSITY": {"description": "kernel sparsity only"},
            "ENTROPY": {"description": "kernel entropy only"},
        }


__all__ = ["LayerKind", "IndicatorKind"]
