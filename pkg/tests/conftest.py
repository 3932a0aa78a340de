"""Fixtures for pytest."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure local source takes precedence over any installed version
ROOT = Path(__file__).resolve().parent.parent
SRC_PATH = ROOT / "src"
if SRC_PATH.exists():
    sys.path.insert(0, str(SRC_PATH))

from kse_toolkit.analysis import analyze_model  # noqa: E402
from kse_toolkit.clustering import CompressionConfig, compress_model  # noqa: E402
from kse_toolkit.logging_config import LoggerFactory  # noqa: E402
from kse_toolkit.model import LayerSpec, ModelGraph  # noqa: E402


class ListHandler(logging.Handler):
    """Collect log records emitted by the package logger."""

    def __init__(self) -> None:
        super().__init__(level=logging.DEBUG)
        self.records: list[logging.LogRecord] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.records.append(record)

    def messages(self, level: int = logging.DEBUG) -> list[str]:
        return [r.getMessage() for r in self.records if r.levelno >= level]


@pytest.fixture
def package_logs():
    """Route the ``kse_toolkit`` logger into a list for the test's duration."""
    handler = ListHandler()
    LoggerFactory.configure(level=logging.DEBUG, handlers=[handler])
    yield handler
    LoggerFactory.configure(level=logging.INFO)


def build_dense_model(seed: int = 0, *, bias: bool = True, relu: bool = True) -> ModelGraph:
    """Return a three-convolution model with a pooled four-class head.

    ``conv1`` and ``fc`` are exempt; ``conv2`` (6 filters over 4 channels)
    and ``conv3`` (5 filters over 6 channels) are compressible.
    """
    rng = np.random.default_rng(seed)

    def maybe_bias(n: int) -> np.ndarray | None:
        return rng.normal(0.0, 0.1, size=n) if bias else None

    layers = [
        LayerSpec.conv("conv1", rng.normal(size=(4, 2, 3, 3)), padding=1, bias=maybe_bias(4)),
    ]
    if relu:
        layers.append(LayerSpec.relu("relu1"))
    layers.append(
        LayerSpec.conv("conv2", rng.normal(size=(6, 4, 3, 3)), padding=1, bias=maybe_bias(6))
    )
    if relu:
        layers.append(LayerSpec.relu("relu2"))
    layers += [
        LayerSpec.conv("conv3", rng.normal(size=(5, 6, 3, 3)), stride=2, bias=maybe_bias(5)),
        LayerSpec.pooling_avg("pool"),
        LayerSpec.flatten("flatten"),
        LayerSpec.fully_connected("fc", rng.normal(size=(4, 5)), bias=maybe_bias(4)),
    ]
    return ModelGraph.build(layers, (2, 7, 7), metadata={"name": "fixture"})


def build_compressed_model(
    seed: int = 0, granularity: int = 3, shift: int = 0, **kwargs: bool
) -> ModelGraph:
    """Analyze and compress :func:`build_dense_model`."""
    dense = build_dense_model(seed, **kwargs)
    cfg = CompressionConfig(granularity=granularity, shift=shift, kmeans_seed=seed)
    return compress_model(dense, analyze_model(dense), cfg)


@pytest.fixture
def make_dense_model():
    return build_dense_model


@pytest.fixture
def make_compressed_model():
    return build_compressed_model


@pytest.fixture
def dense_model() -> ModelGraph:
    return build_dense_model(0)


@pytest.fixture
def compressed_model() -> ModelGraph:
    return build_compressed_model(0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def build_random_model(seed: int, *, compressed: bool = False) -> ModelGraph:
    """Return a random stack of one to four convolutions, every one compressible.

    Channels and filters stay within 8, input sides within 16; kernels,
    strides, padding, biases and ReLUs vary with ``seed``.
    """
    rng = np.random.default_rng(seed)
    channels, height, width = (int(rng.integers(1, 9)), int(rng.integers(1, 17)), int(rng.integers(1, 17)))
    input_shape = (channels, height, width)
    layers = []
    for depth in range(int(rng.integers(1, 5))):
        filters, k = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        padding, stride = int(rng.integers(0, k)), int(rng.integers(1, 3))
        kh, kw = min(k, height + 2 * padding), min(k, width + 2 * padding)
        bias = rng.normal(0.0, 0.1, size=filters) if rng.random() < 0.5 else None
        layers.append(
            LayerSpec.conv(
                f"conv{depth}", rng.normal(0.0, (channels * kh * kw) ** -0.5, size=(filters, channels, kh, kw)),
                stride=stride, padding=padding, bias=bias,
            )
        )
        if rng.random() < 0.5:
            layers.append(LayerSpec.relu(f"relu{depth}"))
        channels = filters
        height = (height + 2 * padding - kh) // stride + 1
        width = (width + 2 * padding - kw) // stride + 1
    dense = ModelGraph.build(layers, input_shape, exempt_ends=False)
    if not compressed:
        return dense
    cfg = CompressionConfig(
        granularity=int(rng.integers(2, 7)), shift=int(rng.integers(0, 2)), kmeans_seed=seed
    )
    return compress_model(dense, analyze_model(dense), cfg)


@pytest.fixture(scope="session")
def make_random_model():
    return build_random_model
