"""Enumerations used across kse-toolkit."""

from __future__ import annotations

from .base import CrosswalkJSONEnum
from .layer import IndicatorKind, LayerKind

__all__ = ["CrosswalkJSONEnum", "LayerKind", "IndicatorKind"]
