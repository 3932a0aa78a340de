"""Utility helpers for kse-toolkit.

Functions
---------
check_filepath(filepath, fullfilepath)
    Ensure the parent directory for a file path exists.
coerce_optional_float(value, field_name)
    Convert a value to float or None.
coerce_optional_int(value, field_name)
    Convert a value to int or None.
log(message, level)
    Log a message through the package logger.

Classes
-------
customJSONEncoder
    JSON encoder for numpy values, enums and paths.
"""

from __future__ import annotations

from .core import (
    check_filepath,
    coerce_optional_float,
    coerce_optional_int,
    customJSONEncoder,
    log,
)

__all__ = [
    "check_filepath",
    "coerce_optional_float",
    "coerce_optional_int",
    "customJSONEncoder",
    "log",
]
