"""Tests for the bundled quadrant task and toy classifier."""

import numpy as np
import pytest

from kse_toolkit.analysis import analyze_model
from kse_toolkit.clustering import CompressionConfig, compress_model
from kse_toolkit.engine import forward_dense
from kse_toolkit.errors import InputValidationError
from kse_toolkit.finetune import TrainConfig, evaluate_accuracy, finetune
from kse_toolkit.interpret import correlation_study
from kse_toolkit.metrics import model_report
from kse_toolkit.toy import (
    IMAGE_SIZE,
    NUM_CLASSES,
    build_toy_model,
    make_quadrant_dataset,
    toy_train_config,
    train_toy_model,
)


class TestQuadrantDataset:
    def test_layout(self) -> None:
        """Four classes, labels in blocks, one grey channel."""
        ds = make_quadrant_dataset(2, seed=1)
        assert len(ds) == 8
        assert ds.image_shape == (1, IMAGE_SIZE, IMAGE_SIZE)
        assert ds.labels.tolist() == [0, 0, 1, 1, 2, 2, 3, 3]

    def test_bright_quadrant_without_noise(self) -> None:
        """Without noise only the labelled quadrant is lit."""
        ds = make_quadrant_dataset(1, size=4, noise=0.0)
        expected = np.zeros((4, 4))
        expected[:2, 2:] = 1.0
        np.testing.assert_array_equal(ds.images[1, 0], expected)
        assert ds.images[3, 0, 2:, 2:].sum() == 4.0
        assert ds.images[3].sum() == 4.0

    def test_seed_controls_noise(self) -> None:
        """The seed alone decides the noise."""
        a = make_quadrant_dataset(2, seed=5)
        b = make_quadrant_dataset(2, seed=5)
        c = make_quadrant_dataset(2, seed=6)
        np.testing.assert_array_equal(a.images, b.images)
        assert not np.array_equal(a.images, c.images)

    @pytest.mark.parametrize(("n", "size"), [(0, 8), (2, 7), (2, 0)])
    def test_invalid_arguments(self, n, size) -> None:
        """Empty classes and bad sizes are rejected."""
        with pytest.raises(InputValidationError):
            make_quadrant_dataset(n, size=size)


class TestToyModel:
    def test_structure(self) -> None:
        """The toy model has two compressible layers and four outputs."""
        model = build_toy_model()
        assert model.input_shape == (1, IMAGE_SIZE, IMAGE_SIZE)
        assert [layer.name for _, layer in model.compressible_layers()] == ["conv2", "conv3"]
        assert dict(model.metadata)["task"] == "quadrant"
        x = np.zeros((1, IMAGE_SIZE, IMAGE_SIZE))
        assert forward_dense(model, x).data.size == NUM_CLASSES

    def test_seeded_initialization(self) -> None:
        """The seed decides the initial weights."""
        a, b = build_toy_model(3), build_toy_model(3)
        for left, right in zip(a.layers, b.layers):
            if left.weights is not None:
                np.testing.assert_array_equal(left.weights.data, right.weights.data)

    def test_train_config(self) -> None:
        """Pretraining trains every layer in batches of eight."""
        cfg = toy_train_config(seed=2, epochs=3)
        assert cfg.train_dense
        assert (cfg.seed, cfg.epochs, cfg.batch_size) == (2, 3, 8)


@pytest.fixture(scope="module")
def pipeline():
    """Pretrain the default toy model and compress it at G = 4."""
    trained = train_toy_model()
    dense = trained.model
    compressed = compress_model(dense, analyze_model(dense), CompressionConfig(granularity=4))
    test = make_quadrant_dataset(8, seed=1)
    return trained, dense, compressed, test


@pytest.mark.slow
class TestToyPipeline:
    def test_pretraining_lowers_the_loss(self, pipeline) -> None:
        """Every pretraining epoch is traced and the loss ends below where it began."""
        trained, _, _, _ = pipeline
        assert len(trained.loss_trace) == 8
        assert trained.loss_trace[-1] < trained.loss_trace[0]

    def test_dense_model_solves_the_task(self, pipeline) -> None:
        """The pretrained model classifies held-out quadrant images."""
        _, dense, _, test = pipeline
        assert evaluate_accuracy(dense, test) >= 0.95

    def test_compression_ratios(self, pipeline) -> None:
        """Both the FLOPs and the parameter count shrink by more than 1.3x."""
        _, dense, compressed, _ = pipeline
        report = model_report(dense, compressed)
        assert report.totals.r_acce > 1.3
        assert report.totals.r_comp > 1.3
        assert all(entry.kernels_kept <= entry.kernels_total for entry in report.layers)

    def test_fine_tuning_keeps_accuracy(self, pipeline) -> None:
        """Centroid fine-tuning leaves the compressed model within three points of dense."""
        _, dense, compressed, test = pipeline
        baseline = evaluate_accuracy(dense, test)
        tuned = finetune(compressed, make_quadrant_dataset(seed=0), TrainConfig(epochs=3)).model
        assert not tuned.is_dense
        assert evaluate_accuracy(tuned, test) >= baseline - 0.03

    def test_correlation_signs(self, pipeline) -> None:
        """Sparser channels get wider masks and richer-entropy channels less heat."""
        _, dense, _, test = pipeline
        result = correlation_study(dense, test, "conv3", 0.005)
        assert result.rho_sparsity > 0.0
        assert result.rho_richness < 0.0
