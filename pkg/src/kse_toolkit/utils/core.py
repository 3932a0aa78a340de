"""Core utility helpers for kse-toolkit.

Type coercion for settings values, file path preparation, JSON
serialization that understands numpy values, and the package logging
shortcut used inside the numerical code.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import asdict, is_dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from kse_toolkit.logging_config import PACKAGE_LOGGER, LoggerFactory


def _blank(value: object) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def coerce_optional_float(value: object, field_name: str = "value") -> float | None:
    """Parse an optional float setting such as ``KSE_ALPHA``.

    ``None`` and blank strings mean "unset" and give ``None``.

    Raises
    ------
    ValueError
        If a string does not parse as a float.
    TypeError
        For booleans and non-numeric types.

    Examples
    --------
    >>> coerce_optional_float("0.5")
    0.5
    >>> coerce_optional_float(" ") is None
    True
    """
    if _blank(value):
        return None
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError as exc:
            raise ValueError(f"{field_name} must be a float-compatible value") from exc
    if isinstance(value, (float, int)) and not isinstance(value, bool):
        return float(value)
    raise TypeError(f"{field_name} must be a float, int, str, or None")


def coerce_optional_int(value: object, field_name: str = "value") -> int | None:
    """Parse an optional integer setting such as ``KSE_GRANULARITY``.

    Integral floats are accepted; booleans and fractional floats are not.

    Examples
    --------
    >>> coerce_optional_int("4")
    4
    >>> coerce_optional_int(3.0)
    3
    """
    if _blank(value):
        return None
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError as exc:
            raise ValueError(f"{field_name} must be an int-compatible value") from exc
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    raise TypeError(f"{field_name} must be an int, str, or None")


def check_filepath(
    filepath: Path | None = None, *, fullfilepath: str | None = None
) -> Path:
    """Create the parent directory of an output file and return its path.

    Pass either ``filepath`` or ``fullfilepath``; the latter wins when
    both are given.

    Raises
    ------
    ValueError
        If no path is given.
    """
    raw = fullfilepath if fullfilepath is not None else filepath
    if raw is None:
        raise ValueError("filepath or fullfilepath is required.")
    target = Path(raw)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def _to_jsonable(value: Any) -> Any:
    """Convert numpy values, enums, paths, dataclasses and models to JSON types."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, datetime):
        return value.isoformat()
    if is_dataclass(value) and not isinstance(value, type):
        return _to_jsonable(asdict(value))
    if hasattr(value, "model_dump"):
        return _to_jsonable(value.model_dump())
    if isinstance(value, Mapping):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [_to_jsonable(v) for v in value]
    return value


class customJSONEncoder(json.JSONEncoder):
    """JSON encoder for numpy values, enums, paths and models.

    Examples
    --------
    >>> import json
    >>> import numpy as np
    >>> json.dumps({"v": np.float64(0.5)}, cls=customJSONEncoder)
    '{"v": 0.5}'
    """

    def default(self, o: Any) -> Any:
        """Return a JSON-serializable representation of o."""
        return _to_jsonable(o)


def log(message: str, level: int = logging.INFO) -> None:
    """Log ``message`` through the ``kse_toolkit`` logger.

    Examples
    --------
    >>> import logging
    >>> log("layer conv2 pruned entirely", level=logging.WARNING)  # doctest: +SKIP
    """
    LoggerFactory.get_logger(PACKAGE_LOGGER).log(level, message)


__all__ = [
    "coerce_optional_float",
    "coerce_optional_int",
    "check_filepath",
    "customJSONEncoder",
    "log",
]
