"""Compression hyper-parameters."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..enums import IndicatorKind
from ..errors import ConfigurationError


class CompressionConfig(BaseModel):
    """Settings of the kernel budget rule and the per-channel k-means.

    Examples
    --------
    >>> CompressionConfig(granularity=4, shift=0).granularity
    4
    >>> CompressionConfig(granularity=1)
    Traceback (most recent call last):
    ...
    kse_toolkit.errors.ConfigurationError: granularity must be >= 2, got 1
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    granularity: int = Field(default=4, description="Budget quantization levels G.")
    shift: int = Field(default=0, description="Exponent offset T of the budget rule.")
    k_neighbors: int = Field(default=5, description="Neighbour count for kernel entropy.")
    alpha: float = Field(default=1.0, description="Entropy weight of the indicator.")
    kmeans_seed: int = Field(default=0, description="Seed of the k-means initialization.")
    kmeans_max_iters: int = Field(default=100, description="Lloyd iteration cap.")
    kmeans_tol: float = Field(default=1e-6, description="Max centroid displacement at convergence.")
    indicator: IndicatorKind = Field(default=IndicatorKind.KSE, description="Channel indicator.")

    @model_validator(mode="after")
    def _check_ranges(self) -> CompressionConfig:
        if self.granularity < 2:
            raise ConfigurationError(f"granularity must be >= 2, got {self.granularity}")
        if self.k_neighbors < 1:
            raise ConfigurationError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if self.kmeans_max_iters < 1:
            raise ConfigurationError(
                f"kmeans_max_iters must be >= 1, got {self.kmeans_max_iters}"
            )
        if not self.kmeans_tol > 0:
            raise ConfigurationError(f"kmeans_tol must be > 0, got {self.kmeans_tol}")
        return self

    def echo(self) -> dict[str, object]:
        """Return the settings echoed into ratio reports."""
        return {
            "granularity": self.granularity,
            "shift": self.shift,
            "alpha": self.alpha,
            "k_neighbors": self.k_neighbors,
            "seed": self.kmeans_seed,
            "indicator": self.indicator.value,
        }


__all__ = ["CompressionConfig"]
