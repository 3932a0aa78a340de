"""Shared toolkit settings.

This module provides the ToolkitSettings class for centralized management of
analysis, compression and runtime defaults, reading from environment
variables and .env files.
"""

from __future__ import annotations

import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from kse_toolkit.clustering import CompressionConfig
from kse_toolkit.enums import IndicatorKind
from kse_toolkit.errors import ConfigurationError
from kse_toolkit.utils import coerce_optional_float, coerce_optional_int
from kse_toolkit.workers import resolve_worker_count

ENV_KEYS: dict[str, str] = {
    "granularity": "KSE_GRANULARITY",
    "shift": "KSE_SHIFT",
    "alpha": "KSE_ALPHA",
    "k_neighbors": "KSE_K_NEIGHBORS",
    "quantile": "KSE_QUANTILE",
    "seed": "KSE_SEED",
    "worker_count": "KSE_WORKERS",
    "kmeans_max_iters": "KSE_KMEANS_MAX_ITERS",
    "kmeans_tol": "KSE_KMEANS_TOL",
    "indicator": "KSE_INDICATOR",
    "log_level": "KSE_LOG_LEVEL",
}
_INT_FIELDS = ("granularity", "shift", "k_neighbors", "seed", "worker_count", "kmeans_max_iters")
_FLOAT_FIELDS = ("alpha", "quantile", "kmeans_tol")
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ToolkitSettings(BaseModel):
    """Defaults for the analysis, compression and study commands.

    Examples
    --------
    Load settings from the environment:

    >>> settings = ToolkitSettings.from_env()
    >>> settings.compression_config().granularity >= 2
    True

    Override specific settings:

    >>> ToolkitSettings.from_env(granularity=6, shift=1).shift
    1

    Methods
    -------
    from_env(dotenv_path, **overrides)
        Build settings from environment variables and optional overrides.
    compression_config()
        Return the CompressionConfig these settings describe.
    """

    model_config = ConfigDict(extra="ignore", frozen=True)

    granularity: int = Field(default=4, description="Compression granularity G. KSE_GRANULARITY.")
    shift: int = Field(default=0, description="Budget exponent shift T. KSE_SHIFT.")
    alpha: float = Field(default=1.0, description="Entropy weight of the indicator. KSE_ALPHA.")
    k_neighbors: int = Field(default=5, description="Neighbours of the kernel entropy. KSE_K_NEIGHBORS.")
    quantile: float = Field(default=0.005, description="Receptive-mask quantile. KSE_QUANTILE.")
    seed: int = Field(default=0, description="Seed of k-means and shuffling. KSE_SEED.")
    worker_count: int = Field(
        default_factory=lambda: resolve_worker_count(None),
        description="Threads used by parallel stages. KSE_WORKERS.",
    )
    kmeans_max_iters: int = Field(default=100, description="Lloyd iteration cap. KSE_KMEANS_MAX_ITERS.")
    kmeans_tol: float = Field(default=1e-6, description="k-means convergence tolerance. KSE_KMEANS_TOL.")
    indicator: IndicatorKind = Field(
        default=IndicatorKind.KSE, description="Channel indicator. KSE_INDICATOR."
    )
    log_level: str = Field(default="INFO", description="Package log level. KSE_LOG_LEVEL.")

    @model_validator(mode="after")
    def _check_ranges(self) -> ToolkitSettings:
        if not 0 < self.quantile < 1:
            raise ConfigurationError(f"quantile must lie in (0, 1), got {self.quantile}")
        if self.worker_count < 1:
            raise ConfigurationError(f"worker_count must be >= 1, got {self.worker_count}")
        if self.log_level.upper() not in _LOG_LEVELS:
            raise ConfigurationError(
                f"log_level must be one of {', '.join(_LOG_LEVELS)}, got {self.log_level!r}"
            )
        # Delegates the remaining range checks.
        self.compression_config()
        return self

    @classmethod
    def from_env(cls, dotenv_path: Path | None = None, **overrides: Any) -> ToolkitSettings:
        """Load settings from the environment and optional overrides.

        Explicit overrides win over a ``.env`` file, which wins over the
        process environment.

        Parameters
        ----------
        dotenv_path : Path or None, optional
            Path to a .env file to read, by default the one found by
            python-dotenv.
        overrides : Any
            Keyword overrides applied on top of environment values; None
            values are ignored.

        Returns
        -------
        ToolkitSettings
            Settings instance populated from environment variables and overrides.

        Raises
        ------
        ConfigurationError
            If a value cannot be parsed or lies out of range.
        """
        env_file_values: Mapping[str, str | None]
        if dotenv_path is not None:
            env_file_values = dotenv_values(dotenv_path)
        else:
            env_file_values = dotenv_values()

        values: dict[str, Any] = {}
        for name, env_key in ENV_KEYS.items():
            raw = overrides.get(name)
            if raw is None:
                raw = env_file_values.get(env_key) or os.getenv(env_key)
            try:
                if name in _INT_FIELDS:
                    raw = coerce_optional_int(raw, env_key)
                elif name in _FLOAT_FIELDS:
                    raw = coerce_optional_float(raw, env_key)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(str(exc), context={"field": name}) from exc
            if raw is not None and raw != "":
                values[name] = raw
        if "indicator" in values and not isinstance(values["indicator"], IndicatorKind):
            try:
                values["indicator"] = IndicatorKind(str(values["indicator"]).lower())
            except ValueError as exc:
                raise ConfigurationError(
                    f"unknown indicator {values['indicator']!r}", context={"field": "indicator"}
                ) from exc
        if values.get("worker_count") is not None:
            values["worker_count"] = resolve_worker_count(values["worker_count"])
        return cls(**values)

    def compression_config(self) -> CompressionConfig:
        """Return the CompressionConfig these settings describe."""
        return CompressionConfig(
            granularity=self.granularity,
            shift=self.shift,
            k_neighbors=self.k_neighbors,
            alpha=self.alpha,
            kmeans_seed=self.seed,
            kmeans_max_iters=self.kmeans_max_iters,
            kmeans_tol=self.kmeans_tol,
            indicator=self.indicator,
        )


__all__ = ["ToolkitSettings", "ENV_KEYS"]
