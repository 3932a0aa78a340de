"""Tests for exception hierarchy module."""

import logging

import pytest

from kse_toolkit.errors import (
    BlobMismatchError,
    BudgetError,
    ConfigurationError,
    CorruptIndexError,
    DegenerateLayerError,
    EmptyDatasetError,
    InputValidationError,
    InvalidGeometryError,
    KseToolkitError,
    LayerError,
    ManifestError,
    ModelFormatError,
    ShapeError,
    StageError,
    TruncatedBlobError,
    UndefinedCorrelationError,
)


class TestExceptionHierarchy:
    """Test custom exception classes."""

    def test_base_exception_inherits_from_exception(self) -> None:
        """KseToolkitError should inherit from Exception."""
        assert issubclass(KseToolkitError, Exception)

    def test_specific_exceptions_inherit_from_base(self) -> None:
        """All specific exceptions should inherit from KseToolkitError."""
        exceptions = [
            ConfigurationError,
            InputValidationError,
            ShapeError,
            ModelFormatError,
            DegenerateLayerError,
            BudgetError,
            StageError,
            UndefinedCorrelationError,
            EmptyDatasetError,
            LayerError,
        ]
        for exc_class in exceptions:
            assert issubclass(exc_class, KseToolkitError)

    def test_parse_errors_share_a_family(self) -> None:
        """File parse errors are distinct but all ModelFormatError."""
        parse_errors = [ManifestError, TruncatedBlobError, BlobMismatchError, CorruptIndexError]
        for exc_class in parse_errors:
            assert issubclass(exc_class, ModelFormatError)
        assert len(set(parse_errors)) == 4
        assert not issubclass(TruncatedBlobError, BlobMismatchError)

    def test_invalid_geometry_is_a_shape_error(self) -> None:
        """InvalidGeometryError is a kind of ShapeError."""
        assert issubclass(InvalidGeometryError, ShapeError)

    def test_exception_with_message(self) -> None:
        """Exception should store message."""
        msg = "layer conv2 has 3 channels"
        exc = KseToolkitError(msg)
        assert str(exc) == msg

    def test_exception_with_context(self) -> None:
        """Exception should store context dict."""
        context = {"layer": "conv2", "index": 2}
        exc = ShapeError("mismatch", context=context)
        assert exc.context == context
        assert exc.context is not context

    def test_exception_without_context(self) -> None:
        """Context should default to an empty dict."""
        assert StageError("dense model expected").context == {}

    def test_raised_errors_are_logged(self, package_logs) -> None:
        """Raising an error logs it with its context."""
        with pytest.raises(BudgetError):
            raise BudgetError("q too large", context={"q": 9})
        messages = package_logs.messages(logging.ERROR)
        assert any("BudgetError: q too large" in m and "'q': 9" in m for m in messages)

    def test_layer_error_chains_cause(self) -> None:
        """LayerError keeps the failure that caused it."""
        try:
            try:
                raise DegenerateLayerError("one filter")
            except DegenerateLayerError as inner:
                raise LayerError("layer 3 (fc) failed") from inner
        except LayerError as exc:
            assert isinstance(exc.__cause__, DegenerateLayerError)
