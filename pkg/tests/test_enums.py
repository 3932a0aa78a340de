"""Tests for the enum helpers."""

import pytest

from kse_toolkit.enums import CrosswalkJSONEnum, IndicatorKind, LayerKind


def test_layer_kind_values_match_manifest_strings() -> None:
    """Layer kind values are the manifest strings."""
    assert [kind.value for kind in LayerKind] == [
        "conv",
        "fully-connected",
        "residual-add",
        "relu",
        "pooling-avg",
        "flatten",
    ]
    assert LayerKind("fully-connected") is LayerKind.FULLY_CONNECTED


def test_weight_bearing_crosswalk() -> None:
    """Only convolutions and fully connected layers carry weights."""
    weighted = {kind for kind in LayerKind if kind.weight_bearing}
    assert weighted == {LayerKind.CONV, LayerKind.FULLY_CONNECTED}
    assert set(LayerKind.CROSSWALK()) == {kind.name for kind in LayerKind}


def test_indicator_kind_meta() -> None:
    """Indicator kinds parse from strings and carry descriptions."""
    assert IndicatorKind("entropy") is IndicatorKind.ENTROPY
    assert "sparsity" in IndicatorKind.SPARSITY.meta("description")
    assert set(IndicatorKind.CROSSWALK()) == {"KSE", "SPARSITY", "ENTROPY"}


def test_members_are_strings() -> None:
    """Members compare equal to their string values."""
    assert isinstance(LayerKind.RELU, str)
    assert LayerKind.RELU == "relu"


def test_base_crosswalk_must_be_implemented() -> None:
    """An enum without a crosswalk cannot answer meta lookups."""
    class Bare(CrosswalkJSONEnum):
        ONE = "one"

    with pytest.raises(NotImplementedError, match="Bare.CROSSWALK"):
        Bare.ONE.meta("anything")
