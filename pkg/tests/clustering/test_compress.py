"""Tests for layer and model compression."""

import logging

import numpy as np
import pytest

from kse_toolkit.analysis import analyze_layer, analyze_model
from kse_toolkit.clustering import (
    CONFIG_METADATA_PREFIX,
    CompressionConfig,
    compress_layer,
    compress_model,
)
from kse_toolkit.enums import IndicatorKind
from kse_toolkit.errors import ConfigurationError, InputValidationError, LayerError, ShapeError, StageError
from kse_toolkit.tensor import WeightTensor


def with_indicator(report, values):
    return report.model_copy(update={"indicator": list(values)})


class TestCompressLayer:
    def test_budgets_follow_indicator(self, rng) -> None:
        """Each channel keeps the number of kernels its indicator buys."""
        w = WeightTensor(rng.normal(size=(8, 4, 3, 3)))
        report = with_indicator(analyze_layer(w), [0.0, 0.3, 0.6, 1.0])
        layer = compress_layer(w, report, CompressionConfig(granularity=4))
        assert layer.q.tolist() == [0, 2, 4, 8]
        assert layer.total_kernels == 14
        assert layer.dense_shape == (8, 4, 3, 3)
        assert not layer.index_table[:, 0].any()
        assert set(layer.index_table[:, 1].tolist()) == {1, 2}
        np.testing.assert_array_equal(layer.centroids[3], w.channel_slice(3))
        assert layer.index_table[:, 3].tolist() == list(range(1, 9))

    def test_parallel_channels_match_serial(self, rng) -> None:
        """Clustering channels on threads gives the serial result."""
        w = WeightTensor(rng.normal(size=(8, 5, 3, 3)))
        report = analyze_layer(w)
        cfg = CompressionConfig(granularity=3)
        serial = compress_layer(w, report, cfg, worker_count=1)
        parallel = compress_layer(w, report, cfg, worker_count=3)
        np.testing.assert_array_equal(serial.index_table, parallel.index_table)
        for a, b in zip(serial.centroids, parallel.centroids):
            np.testing.assert_array_equal(a, b)

    def test_report_shape_mismatch(self, rng) -> None:
        """A report for another channel count is rejected."""
        w = WeightTensor(rng.normal(size=(8, 4, 3, 3)))
        other = analyze_layer(WeightTensor(rng.normal(size=(8, 3, 3, 3))))
        with pytest.raises(ShapeError):
            compress_layer(w, other, CompressionConfig())


class TestCompressModel:
    def test_structure_and_metadata(self, dense_model) -> None:
        """Exempt layers and biases are kept and the settings are echoed."""
        cfg = CompressionConfig(granularity=3, shift=1, kmeans_seed=7)
        compressed = compress_model(dense_model, analyze_model(dense_model), cfg)
        assert not compressed.is_dense
        assert compressed.layer_shapes() == dense_model.layer_shapes()
        for (_, before), (_, after) in zip(dense_model.weight_layers(), compressed.weight_layers()):
            if before.compress_exempt:
                np.testing.assert_array_equal(after.weights.data, before.weights.data)
            else:
                assert after.is_compressed
            np.testing.assert_array_equal(after.bias, before.bias)
        assert compressed.metadata["name"] == "fixture"
        assert compressed.metadata[CONFIG_METADATA_PREFIX + "granularity"] == "3"
        assert compressed.metadata["kse.shift"] == "1"
        assert compressed.metadata["kse.seed"] == "7"
        assert compressed.metadata["kse.indicator"] == "kse"

    def test_deterministic(self, dense_model) -> None:
        """Two runs with the same settings agree exactly."""
        reports = analyze_model(dense_model)
        cfg = CompressionConfig(granularity=3)
        a = compress_model(dense_model, reports, cfg)
        b = compress_model(dense_model, reports, cfg)
        for (_, left), (_, right) in zip(a.compressible_layers(), b.compressible_layers()):
            np.testing.assert_array_equal(left.compressed.index_table, right.compressed.index_table)
            for lc, rc in zip(left.compressed.centroids, right.compressed.centroids):
                np.testing.assert_array_equal(lc, rc)

    def test_logs_kernel_counts(self, dense_model, package_logs) -> None:
        """Each layer logs how many kernels it kept."""
        compress_model(dense_model, analyze_model(dense_model), CompressionConfig())
        messages = package_logs.messages(logging.INFO)
        assert any(m.startswith("Compressed layer conv2:") and m.endswith("/24 kernels kept") for m in messages)
        assert any(m.startswith("Compressed layer conv3:") and m.endswith("/30 kernels kept") for m in messages)

    def test_fully_pruned_layer_warns(self, dense_model, package_logs) -> None:
        """Zero indicators prune every channel with a warning."""
        reports = [with_indicator(r, [0.0] * r.channels) for r in analyze_model(dense_model)]
        compressed = compress_model(dense_model, reports, CompressionConfig())
        assert all(layer.compressed.total_kernels == 0 for _, layer in compressed.compressible_layers())
        assert any("pruned entirely" in m for m in package_logs.messages(logging.WARNING))

    def test_reports_must_match(self, dense_model) -> None:
        """Missing or unknown reports are rejected before any work."""
        reports = analyze_model(dense_model)
        with pytest.raises(InputValidationError, match="reports do not match"):
            compress_model(dense_model, reports[:1], CompressionConfig())
        renamed = reports + [reports[0].model_copy(update={"layer_id": "ghost"})]
        with pytest.raises(InputValidationError, match="ghost"):
            compress_model(dense_model, renamed, CompressionConfig())

    def test_indicator_kind_must_match_config(self, dense_model) -> None:
        """Reports scored with one indicator cannot drive a budget for another."""
        reports = analyze_model(dense_model, indicator=IndicatorKind.ENTROPY)
        with pytest.raises(ConfigurationError, match="conv2, conv3") as info:
            compress_model(dense_model, reports, CompressionConfig())
        assert info.value.context["indicator"] == "kse"
        compressed = compress_model(dense_model, reports, CompressionConfig(indicator=IndicatorKind.ENTROPY))
        assert not compressed.is_dense

    def test_swapped_reports_fail_per_layer(self, dense_model) -> None:
        """A report of the wrong shape fails with the layer named."""
        conv2, conv3 = analyze_model(dense_model)
        swapped = [
            conv3.model_copy(update={"layer_id": "conv2"}),
            conv2.model_copy(update={"layer_id": "conv3"}),
        ]
        with pytest.raises(LayerError, match="conv2") as info:
            compress_model(dense_model, swapped, CompressionConfig())
        assert isinstance(info.value.__cause__, ShapeError)

    def test_compressed_input_is_rejected(self, compressed_model) -> None:
        """A compressed model cannot be compressed again."""
        with pytest.raises(StageError):
            compress_model(compressed_model, [], CompressionConfig())
