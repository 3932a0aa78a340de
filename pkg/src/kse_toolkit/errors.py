"""Custom exception hierarchy for kse-toolkit.

Every error raised by the toolkit derives from :class:`KseToolkitError`, so
callers (and the command-line front end) can catch toolkit failures as one
family while still telling parse errors, shape errors and stage errors
apart.
"""

import logging
from collections.abc import Mapping

from kse_toolkit.utils.core import log


class KseToolkitError(Exception):
    """Base exception for the kse-toolkit library.

    Parameters
    ----------
    message : str
        Human-readable error message.
    context : Mapping[str, object] | None
        Additional context information for debugging. Default is None.

    Examples
    --------
    >>> try:
    ...     raise KseToolkitError("bad layer", context={"layer": "conv2"})
    ... except KseToolkitError as exc:
    ...     print(exc.context["layer"])
    conv2
    """

    def __init__(
        self,
        message: str,
        context: Mapping[str, object] | None = None,
    ) -> None:
        """Initialize the exception with message and optional context."""
        super().__init__(message)
        self.context = dict(context) if context is not None else {}
        self._log_context()

    def _log_context(self) -> None:
        """Log error with context for debugging."""
        context_str = f"\nContext: {self.context}" if self.context else ""
        log(
            f"{self.__class__.__name__}: {str(self)}{context_str}",
            level=logging.ERROR,
        )


class ConfigurationError(KseToolkitError):
    """Configuration validation failed.

    Raised for out-of-range compression, training or settings values.
    """


class InputValidationError(KseToolkitError):
    """Input validation failed.

    Raised when a provided argument doesn't meet required constraints.
    """


class ShapeError(KseToolkitError):
    """Tensor or layer shapes are incompatible."""


class InvalidGeometryError(ShapeError):
    """Convolution geometry yields a non-positive output size."""


class ModelFormatError(KseToolkitError):
    """A model or dataset file could not be parsed."""


class ManifestError(ModelFormatError):
    """The text manifest is malformed or missing required entries."""


class TruncatedBlobError(ModelFormatError):
    """The binary blob is shorter than the manifest claims."""


class BlobMismatchError(ModelFormatError):
    """Manifest dimensions disagree with the blob contents."""


class CorruptIndexError(ModelFormatError):
    """A stored kernel index lies outside ``[1, q_c]``."""


class DegenerateLayerError(KseToolkitError):
    """The layer has fewer than two filters, so kernel entropy is undefined."""


class BudgetError(KseToolkitError):
    """Requested cluster count is outside ``[1, N]``."""


class StageError(KseToolkitError):
    """Operation applied to a model in the wrong stage (dense vs compressed)."""


class UndefinedCorrelationError(KseToolkitError):
    """Rank correlation is undefined because a ranked vector is constant."""


class EmptyDatasetError(KseToolkitError):
    """Training or evaluation was requested over an empty dataset."""


class LayerError(KseToolkitError):
    """A per-layer computation failed; the message names the layer."""


__all__ = [
    "KseToolkitError",
    "ConfigurationError",
    "InputValidationError",
    "ShapeError",
    "InvalidGeometryError",
    "ModelFormatError",
    "ManifestError",
    "TruncatedBlobError",
    "BlobMismatchError",
    "CorruptIndexError",
    "DegenerateLayerError",
    "BudgetError",
    "StageError",
    "UndefinedCorrelationError",
    "EmptyDatasetError",
    "LayerError",
]
