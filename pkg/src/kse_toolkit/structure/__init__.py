"""Serializable report records."""

from __future__ import annotations

from .base import BaseStructure, spec_field

__all__ = ["BaseStructure", "spec_field"]
