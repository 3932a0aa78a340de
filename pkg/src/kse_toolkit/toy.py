"""Bundled toy classifier and its synthetic four-class task.

Class ``k`` images have a bright quadrant ``k`` (top-left, top-right,
bottom-left, bottom-right) over Gaussian background noise. The toy model
is three 3x3 convolutions with ReLU, a 4x4 average pool and a
fully-connected head; it is small enough to train on a laptop in seconds.
"""

from __future__ import annotations

import numpy as np

from .dataset import LabeledDataset
from .errors import InputValidationError
from .finetune import FinetuneResult, TrainConfig, finetune
from .model import LayerSpec, ModelGraph
from .validation import validate_positive_int

NUM_CLASSES = 4
IMAGE_SIZE = 8
TOY_METADATA = {"name": "kse-toy", "task": "quadrant"}


def make_quadrant_dataset(
    n_per_class: int = 16,
    size: int = IMAGE_SIZE,
    noise: float = 0.1,
    seed: int = 0,
) -> LabeledDataset:
    """Return ``4 * n_per_class`` single-channel ``size x size`` images.

    Parameters
    ----------
    n_per_class : int, default=16
        Images per class.
    size : int, default=8
        Image side; must be even.
    noise : float, default=0.1
        Standard deviation of the background noise.
    seed : int, default=0
        Seed of the noise generator.

    Returns
    -------
    LabeledDataset
        Images ordered class by class.

    Examples
    --------
    >>> ds = make_quadrant_dataset(2, seed=1)
    >>> len(ds), ds.image_shape, ds.labels.tolist()
    (8, (1, 8, 8), [0, 0, 1, 1, 2, 2, 3, 3])
    """
    validate_positive_int(n_per_class, "n_per_class")
    validate_positive_int(size, "size")
    if size % 2:
        raise InputValidationError(f"size must be even, got {size}")
    rng = np.random.default_rng(seed)
    half = size // 2
    images = rng.normal(0.0, noise, size=(NUM_CLASSES * n_per_class, 1, size, size))
    labels = np.repeat(np.arange(NUM_CLASSES), n_per_class)
    for idx, label in enumerate(labels.tolist()):
        row, col = divmod(label, 2)
        images[idx, 0, row * half : (row + 1) * half, col * half : (col + 1) * half] += 1.0
    return LabeledDataset(images, labels)


def _he_normal(rng: np.random.Generator, shape: tuple[int, int, int, int]) -> np.ndarray:
    fan_in = shape[1] * shape[2] * shape[3]
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def build_toy_model(seed: int = 0, width: int = 8) -> ModelGraph:
    """Return the untrained toy classifier.

    ``conv(1->w) relu conv(w->w) relu conv(w->w) relu avgpool(4) flatten
    fc(4w->4)``; the first convolution and the head are exempt from
    compression.
    """
    validate_positive_int(width, "width")
    rng = np.random.default_rng(seed)
    pooled = width * (IMAGE_SIZE // 4) ** 2
    layers = [
        LayerSpec.conv("conv1", _he_normal(rng, (width, 1, 3, 3)), padding=1, bias=np.zeros(width)),
        LayerSpec.relu("relu1"),
        LayerSpec.conv("conv2", _he_normal(rng, (width, width, 3, 3)), padding=1, bias=np.zeros(width)),
        LayerSpec.relu("relu2"),
        LayerSpec.conv("conv3", _he_normal(rng, (width, width, 3, 3)), padding=1, bias=np.zeros(width)),
        LayerSpec.relu("relu3"),
        LayerSpec.pooling_avg("pool", 4),
        LayerSpec.flatten("flatten"),
        LayerSpec.fully_connected(
            "fc",
            rng.normal(0.0, np.sqrt(1.0 / pooled), size=(NUM_CLASSES, pooled)),
            bias=np.zeros(NUM_CLASSES),
        ),
    ]
    return ModelGraph.build(layers, (1, IMAGE_SIZE, IMAGE_SIZE), metadata=TOY_METADATA)


def toy_train_config(seed: int = 0, epochs: int = 8) -> TrainConfig:
    """Return the pretraining settings of the toy model."""
    return TrainConfig(
        learning_rate=0.02,
        momentum=0.9,
        epochs=epochs,
        batch_size=8,
        seed=seed,
        train_dense=True,
    )


def train_toy_model(
    model: ModelGraph | None = None,
    dataset: LabeledDataset | None = None,
    *,
    seed: int = 0,
    epochs: int = 8,
    worker_count: int | None = 1,
    progress: bool = False,
) -> FinetuneResult:
    """Pretrain every layer of the toy model on the quadrant task."""
    model = model if model is not None else build_toy_model(seed)
    dataset = dataset if dataset is not None else make_quadrant_dataset(seed=seed)
    return finetune(
        model,
        dataset,
        toy_train_config(seed, epochs),
        worker_count=worker_count,
        progress=progress,
    )


__all__ = [
    "NUM_CLASSES",
    "IMAGE_SIZE",
    "make_quadrant_dataset",
    "build_toy_model",
    "toy_train_config",
    "train_toy_model",
]
