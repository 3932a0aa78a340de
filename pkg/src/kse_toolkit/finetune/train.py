"""Mini-batch fine-tuning loop and accuracy evaluation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from ..dataset import LabeledDataset
from ..engine import run_layers
from ..errors import EmptyDatasetError, StageError
from ..model import ModelGraph
from ..utils import log
from ..workers import ordered_map
from .backward import ModelGradients, add_gradients, loss_and_gradients
from .config import TrainConfig
from .optimizer import OptimizerState, sgd_step


@dataclass(frozen=True, eq=False)
class FinetuneResult:
    """Trained model and the mean training loss of every epoch."""

    model: ModelGraph
    loss_trace: list[float]


def _batch_gradients(
    model: ModelGraph,
    dataset: LabeledDataset,
    indices: np.ndarray,
    include_dense: bool,
    worker_count: int | None,
) -> tuple[list[float], ModelGradients]:
    results = ordered_map(
        lambda idx: loss_and_gradients(
            model, dataset.images[idx], int(dataset.labels[idx]), include_dense=include_dense
        ),
        indices.tolist(),
        worker_count=worker_count,
    )
    total: ModelGradients = {}
    for _, grads in results:
        total = add_gradients(total, grads)
    scale = 1.0 / len(results)
    return [loss for loss, _ in results], {idx: g.scaled(scale) for idx, g in total.items()}


def finetune(
    model: ModelGraph,
    dataset: LabeledDataset,
    cfg: TrainConfig,
    *,
    worker_count: int | None = 1,
    progress: bool = False,
) -> FinetuneResult:
    """Fine-tune a model with mini-batch momentum SGD.

    Each epoch shuffles the dataset with a generator seeded from
    ``cfg.seed``, so a run is reproducible. The recorded loss of an epoch
    is the mean of the per-example losses seen during it.

    Parameters
    ----------
    model : ModelGraph
        Compressed model (or any model when ``cfg.train_dense`` is set)
        whose output is ``K x 1 x 1`` class scores.
    dataset : LabeledDataset
        Training examples.
    cfg : TrainConfig
        Optimizer settings.
    worker_count : int or None, default=1
        Threads for the per-example gradients of a batch.
    progress : bool, default=False
        Show a tqdm progress bar over epochs.

    Returns
    -------
    FinetuneResult
        Updated model and the per-epoch loss trace.

    Raises
    ------
    EmptyDatasetError
        If the dataset has no examples.
    StageError
        If nothing in the model is trainable under ``cfg``.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("fine-tuning needs at least one example")
    if model.is_dense and not cfg.train_dense:
        raise StageError("the model has no compressed layer to fine-tune; set train_dense to train it")
    rng = np.random.default_rng(cfg.seed)
    state = OptimizerState()
    trace: list[float] = []
    for epoch in tqdm(range(cfg.epochs), desc="finetune", disable=not progress):
        rate = cfg.learning_rate_at(epoch)
        order = rng.permutation(len(dataset))
        losses: list[float] = []
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            batch_losses, grads = _batch_gradients(
                model, dataset, batch, cfg.train_dense, worker_count
            )
            losses.extend(batch_losses)
            model = sgd_step(model, grads, cfg, state, learning_rate=rate)
        epoch_loss = math.fsum(losses) / len(losses)
        trace.append(epoch_loss)
        log(f"Epoch {epoch + 1}/{cfg.epochs}: loss {epoch_loss:.6f} (lr {rate:g})", level=logging.INFO)
    return FinetuneResult(model=model, loss_trace=trace)


def predict(
    model: ModelGraph, dataset: LabeledDataset, *, worker_count: int | None = 1
) -> np.ndarray:
    """Return the arg-max class of every example."""
    return np.array(
        ordered_map(
            lambda image: int(np.argmax(run_layers(model, image).reshape(-1))),
            list(dataset.images),
            worker_count=worker_count,
        ),
        dtype=np.int64,
    )


def evaluate_accuracy(
    model: ModelGraph, dataset: LabeledDataset, *, worker_count: int | None = 1
) -> float:
    """Return the top-1 accuracy of ``model`` on ``dataset``.

    Raises
    ------
    EmptyDatasetError
        If the dataset has no examples.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("accuracy is undefined on an empty dataset")
    return float(np.mean(predict(model, dataset, worker_count=worker_count) == dataset.labels))


__all__ = ["FinetuneResult", "finetune", "predict", "evaluate_accuracy"]
