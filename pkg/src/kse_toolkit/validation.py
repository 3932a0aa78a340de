"""Input validation utilities for kse-toolkit.

Validators used at API boundaries (configuration objects, file loaders and
the command-line front end). Each returns the validated value and raises
:class:`~kse_toolkit.errors.InputValidationError` naming the field.
"""

from __future__ import annotations

import math
from pathlib import Path

from kse_toolkit.errors import InputValidationError


def validate_positive_int(value: int, field_name: str) -> int:
    """Validate that a value is an integer ``>= 1``.

    Parameters
    ----------
    value : int
        Value to validate.
    field_name : str
        Name of the field for error messages.

    Returns
    -------
    int
        The validated integer.

    Raises
    ------
    InputValidationError
        If value is not an int or is smaller than one.
    """
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputValidationError(
            f"{field_name} must be an integer, got {type(value).__name__}"
        )
    if value < 1:
        raise InputValidationError(f"{field_name} must be >= 1, got {value}")
    return value


def validate_unit_interval(value: float, field_name: str) -> float:
    """Return ``value`` as a float if it is finite and within ``[0, 1]``."""
    value = float(value)
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise InputValidationError(f"{field_name} must lie in [0, 1], got {value}")
    return value


def validate_open_unit_interval(value: float, field_name: str) -> float:
    """Return ``value`` as a float if it lies strictly between 0 and 1."""
    value = float(value)
    if not math.isfinite(value) or value <= 0.0 or value >= 1.0:
        raise InputValidationError(f"{field_name} must lie in (0, 1), got {value}")
    return value


def validate_safe_path(
    path: Path | str,
    base_dir: Path | None = None,
    field_name: str = "path",
) -> Path:
    """Validate that a path does not escape a base directory.

    Parameters
    ----------
    path : Path or str
        Path to validate.
    base_dir : Path or None
        Directory the resolved path must stay inside. None only rejects
        '..' components.
    field_name : str
        Name of the field for error messages. Default is "path".

    Returns
    -------
    Path
        Resolved path.

    Raises
    ------
    InputValidationError
        If the path contains '..' or resolves outside ``base_dir``.
    """
    if isinstance(path, str):
        path = Path(path)
    if ".." in path.parts:
        raise InputValidationError(f"{field_name} contains '..': {path}")
    resolved = path.resolve()
    if base_dir is not None:
        try:
            resolved.relative_to(base_dir.resolve())
        except ValueError:
            raise InputValidationError(
                f"{field_name} escapes base directory: {path} is not within {base_dir}"
            ) from None
    return resolved


__all__ = [
    "validate_positive_int",
    "validate_unit_interval",
    "validate_open_unit_interval",
    "validate_safe_path",
]
