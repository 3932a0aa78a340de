"""Tests for kernel sparsity, kernel entropy and the channel indicator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kse_toolkit.analysis import (
    KseReport,
    NeighborMatrix,
    analyze_layer,
    analyze_model,
    density_metric,
    kernel_entropy,
    kernel_sparsity,
    knn_distance_matrix,
    kse_indicator,
    minmax_normalize,
    read_reports,
    write_reports,
)
from kse_toolkit.enums import IndicatorKind
from kse_toolkit.errors import (
    DegenerateLayerError,
    InputValidationError,
    LayerError,
    StageError,
)
from kse_toolkit.model import LayerSpec, ModelGraph
from kse_toolkit.tensor import WeightTensor


def scalar_kernels(*values: float) -> WeightTensor:
    return WeightTensor(np.array(values, dtype=np.float64).reshape(len(values), 1, 1, 1))


class TestSparsity:
    def test_l1_norm(self) -> None:
        """Sparsity is the L1 norm of a channel's kernels."""
        assert kernel_sparsity(scalar_kernels(3.0, -4.0), 0) == 7.0

    def test_zero_channel(self) -> None:
        """An all-zero channel has zero sparsity."""
        w = WeightTensor(np.zeros((3, 2, 2, 2)))
        assert kernel_sparsity(w, 1) == 0.0

    def test_only_reads_its_channel(self, rng) -> None:
        """Other channels do not leak into the sum."""
        data = rng.normal(size=(4, 2, 3, 3))
        data[:, 1] = 0.0
        assert kernel_sparsity(WeightTensor(data), 1) == 0.0
        assert kernel_sparsity(WeightTensor(data), 0) > 0.0

    def test_channel_out_of_range(self) -> None:
        """A channel index past the input channels is rejected."""
        with pytest.raises(InputValidationError):
            kernel_sparsity(scalar_kernels(1.0), 1)


class TestNeighbours:
    def test_one_neighbour_matrix(self) -> None:
        """With k = 1 each row keeps only its nearest distance."""
        a = knn_distance_matrix(scalar_kernels(0.0, 1.0, 10.0), 0, k=1)
        np.testing.assert_array_equal(a.values, [[0, 1, 0], [1, 0, 0], [0, 9, 0]])
        assert a.k == 1
        np.testing.assert_array_equal(density_metric(a), [1.0, 1.0, 9.0])

    def test_k_is_clamped(self) -> None:
        """k larger than N - 1 falls back to N - 1."""
        a = knn_distance_matrix(scalar_kernels(0.0, 1.0, 10.0), 0, k=5)
        assert a.k == 2
        np.testing.assert_array_equal(density_metric(a), [11.0, 10.0, 19.0])

    def test_row_has_k_neighbours_and_zero_diagonal(self, rng) -> None:
        """Each row has exactly k entries and none on the diagonal."""
        w = WeightTensor(rng.normal(size=(9, 2, 3, 3)))
        a = knn_distance_matrix(w, 1, k=3)
        assert np.all(np.diag(a.values) == 0.0)
        assert np.all(np.count_nonzero(a.values, axis=1) == 3)

    def test_ties_prefer_lower_index(self) -> None:
        """Equidistant neighbours are broken towards the lower index."""
        a = knn_distance_matrix(scalar_kernels(0.0, -1.0, 1.0), 0, k=1)
        assert a.values[0].tolist() == [0.0, 1.0, 0.0]

    def test_single_filter_is_degenerate(self) -> None:
        """One filter leaves no neighbours to measure."""
        with pytest.raises(DegenerateLayerError):
            knn_distance_matrix(scalar_kernels(1.0), 0)

    def test_k_must_be_positive(self) -> None:
        """k = 0 is rejected."""
        with pytest.raises(InputValidationError):
            knn_distance_matrix(scalar_kernels(1.0, 2.0), 0, k=0)


class TestEntropy:
    def test_worked_example(self) -> None:
        """Densities 1, 1 and 9 give an entropy of about 0.8659."""
        a = knn_distance_matrix(scalar_kernels(0.0, 1.0, 10.0), 0, k=1)
        p = np.array([1.0, 1.0, 9.0]) / 11.0
        expected = -float(np.sum(p * np.log2(p)))
        assert kernel_entropy(a) == pytest.approx(expected, abs=1e-12)
        assert kernel_entropy(a) == pytest.approx(0.8659, abs=1e-4)

    def test_identical_kernels_give_maximum(self) -> None:
        """Identical kernels reach log2 N."""
        w = WeightTensor(np.ones((8, 1, 3, 3)))
        assert kernel_entropy(knn_distance_matrix(w, 0)) == pytest.approx(3.0)

    def test_uniform_density_gives_maximum(self) -> None:
        """Equal densities reach log2 N."""
        a = NeighborMatrix(values=np.array([[0.0, 2.0], [2.0, 0.0]]), k=1)
        assert kernel_entropy(a) == pytest.approx(1.0)

    @settings(max_examples=1000, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_entropy_bounds(self, n: int, k: int, seed: int) -> None:
        """Entropy stays in [0, log2 N] for random kernels."""
        w = WeightTensor(np.random.default_rng(seed).normal(size=(n, 1, 2, 2)))
        e = kernel_entropy(knn_distance_matrix(w, 0, k))
        assert 0.0 <= e <= math.log2(n) + 1e-12

    def test_invariant_to_kernel_order(self, rng) -> None:
        """Permuting the filters leaves the entropy unchanged."""
        data = rng.normal(size=(7, 1, 3, 3))
        order = rng.permutation(7)
        before = kernel_entropy(knn_distance_matrix(WeightTensor(data), 0))
        after = kernel_entropy(knn_distance_matrix(WeightTensor(data[order]), 0))
        assert before == pytest.approx(after, abs=1e-12)


class TestNormalization:
    def test_minmax(self) -> None:
        """Values are rescaled onto [0, 1]."""
        assert minmax_normalize([0.0, 5.0, 10.0]).tolist() == [0.0, 0.5, 1.0]

    def test_constant_vector_maps_to_ones(self) -> None:
        """A constant vector maps to all ones."""
        assert minmax_normalize([3.0, 3.0]).tolist() == [1.0, 1.0]

    def test_empty(self) -> None:
        """An empty vector cannot be normalized."""
        with pytest.raises(InputValidationError):
            minmax_normalize([])

    def test_non_finite(self) -> None:
        """NaN values are rejected."""
        with pytest.raises(InputValidationError):
            minmax_normalize([1.0, float("nan")])

    def test_indicator_values(self) -> None:
        """The indicator is sqrt(s / (1 + alpha * e))."""
        assert kse_indicator(1.0, 1.0, 1.0) == pytest.approx(math.sqrt(0.5))
        assert kse_indicator(1.0, 0.0, 1.0) == 1.0
        assert kse_indicator(0.0, 0.3, 2.0) == 0.0
        assert kse_indicator(0.25, 1.0, 0.0) == 0.5

    def test_negative_alpha(self) -> None:
        """A negative entropy weight is rejected."""
        with pytest.raises(InputValidationError):
            kse_indicator(1.0, 1.0, -0.1)


class TestAnalyzeLayer:
    def test_report_shape_and_ranges(self, rng) -> None:
        """A layer report has one entry per channel, all in [0, 1]."""
        w = WeightTensor(rng.normal(size=(6, 4, 3, 3)))
        report = analyze_layer(w, layer_id="conv", layer_index=2)
        assert report.channels == 4
        assert (report.layer_id, report.layer_index, report.n_filters) == ("conv", 2, 6)
        assert report.indicator_kind is IndicatorKind.KSE
        for vector in (report.sparsity_norm, report.entropy_norm, report.indicator):
            assert min(vector) >= 0.0 and max(vector) <= 1.0
        assert max(report.indicator) == 1.0
        assert min(report.indicator) == 0.0

    def test_identical_channels_all_score_one(self, rng) -> None:
        """Identical channels normalize to a constant indicator of one."""
        slice_ = rng.normal(size=(5, 1, 3, 3))
        w = WeightTensor(np.repeat(slice_, 3, axis=1))
        assert analyze_layer(w).indicator == [1.0, 1.0, 1.0]

    def test_zero_channel_scores_lowest(self, rng) -> None:
        """A zeroed channel gets indicator 0."""
        data = rng.normal(size=(5, 3, 3, 3))
        data[:, 2] = 0.0
        report = analyze_layer(WeightTensor(data))
        assert report.sparsity_raw[2] == 0.0
        assert report.indicator[2] == 0.0

    def test_global_scale_leaves_indicator_unchanged(self, rng) -> None:
        """Scaling all weights changes raw sparsity but not the indicator."""
        data = rng.normal(size=(6, 4, 3, 3))
        base = analyze_layer(WeightTensor(data))
        scaled = analyze_layer(WeightTensor(data * 4.0))
        np.testing.assert_allclose(scaled.sparsity_raw, np.array(base.sparsity_raw) * 4.0, rtol=1e-5)
        np.testing.assert_allclose(scaled.indicator, base.indicator, atol=1e-5)

    @pytest.mark.parametrize("kind", ["sparsity", "entropy", IndicatorKind.KSE])
    def test_indicator_variants(self, rng, kind) -> None:
        """Each indicator kind picks the matching normalized vector."""
        w = WeightTensor(rng.normal(size=(6, 4, 3, 3)))
        report = analyze_layer(w, indicator=kind)
        assert report.indicator_kind is IndicatorKind(kind)
        if report.indicator_kind is IndicatorKind.SPARSITY:
            assert report.indicator == report.sparsity_norm
        if report.indicator_kind is IndicatorKind.ENTROPY:
            np.testing.assert_allclose(report.indicator, 1.0 - np.array(report.entropy_norm))

    def test_single_filter_layer(self) -> None:
        """A layer with one filter cannot be analyzed."""
        with pytest.raises(DegenerateLayerError):
            analyze_layer(WeightTensor(np.ones((1, 2, 3, 3))))


class TestAnalyzeModel:
    def test_reports_compressible_layers_in_order(self, dense_model) -> None:
        """Only compressible layers are reported, in model order."""
        reports = analyze_model(dense_model)
        assert [r.layer_id for r in reports] == ["conv2", "conv3"]
        assert [r.channels for r in reports] == [4, 6]
        assert [r.layer_index for r in reports] == [
            idx for idx, _ in dense_model.compressible_layers()
        ]

    def test_parallel_matches_serial(self, dense_model) -> None:
        """Worker count does not change the reports."""
        serial = analyze_model(dense_model, worker_count=1)
        parallel = analyze_model(dense_model, worker_count=4)
        assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]

    def test_exempt_only_model_yields_nothing(self) -> None:
        """A model with only exempt layers gives no reports."""
        layers = [LayerSpec.conv("a", np.ones((2, 1, 1, 1))), LayerSpec.conv("b", np.ones((3, 2, 1, 1)))]
        assert analyze_model(ModelGraph.build(layers, (1, 2, 2))) == []

    def test_layer_failure_is_wrapped(self) -> None:
        """A failing layer is named in a LayerError with the cause chained."""
        layers = [
            LayerSpec.conv("a", np.ones((2, 1, 1, 1))),
            LayerSpec.conv("narrow", np.ones((1, 2, 1, 1))),
            LayerSpec.conv("c", np.ones((2, 1, 1, 1))),
        ]
        with pytest.raises(LayerError, match="narrow") as info:
            analyze_model(ModelGraph.build(layers, (1, 2, 2)))
        assert isinstance(info.value.__cause__, DegenerateLayerError)

    def test_compressed_model_is_rejected(self, compressed_model) -> None:
        """Analysis needs a dense model."""
        with pytest.raises(StageError):
            analyze_model(compressed_model)


class TestReportFile:
    def test_round_trip(self, tmp_path, dense_model) -> None:
        """Reports survive a JSON-lines round trip, indicator kind included."""
        reports = analyze_model(dense_model, k=3, alpha=0.5, indicator="entropy")
        path = write_reports(reports, tmp_path / "reports.jsonl")
        lines = (tmp_path / "reports.jsonl").read_text().strip().splitlines()
        assert len(lines) == 2
        loaded = read_reports(path)
        assert loaded == reports
        assert loaded[0].indicator_kind is IndicatorKind.ENTROPY

    def test_report_rejects_out_of_range_indicator(self) -> None:
        """Indicator values above one fail validation."""
        with pytest.raises(ValueError):
            KseReport(
                layer_id="x",
                n_filters=2,
                sparsity_raw=[1.0],
                entropy_raw=[1.0],
                sparsity_norm=[1.0],
                entropy_norm=[1.0],
                indicator=[1.5],
                alpha=1.0,
                k_neighbors=5,
            )

    def test_report_rejects_ragged_vectors(self) -> None:
        """Per-channel vectors must share one length."""
        with pytest.raises(ValueError):
            KseReport(
                layer_id="x",
                n_filters=2,
                sparsity_raw=[1.0, 2.0],
                entropy_raw=[1.0],
                sparsity_norm=[1.0],
                entropy_norm=[1.0],
                indicator=[1.0],
                alpha=1.0,
                k_neighbors=5,
            )
