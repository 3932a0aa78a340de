"""Centroid fine-tuning of compressed models."""

from __future__ import annotations

from .backward import (
    LayerGradients,
    ModelGradients,
    add_gradients,
    backward_compressed_layer,
    backward_dense_layer,
    example_loss,
    loss_and_gradients,
    softmax_cross_entropy,
)
from .config import TrainConfig
from .optimizer import OptimizerState, sgd_step
from .train import FinetuneResult, evaluate_accuracy, finetune, predict

__all__ = [
    "TrainConfig",
    "LayerGradients",
    "ModelGradients",
    "add_gradients",
    "softmax_cross_entropy",
    "backward_dense_layer",
    "backward_compressed_layer",
    "loss_and_gradients",
    "example_loss",
    "OptimizerState",
    "sgd_step",
    "FinetuneResult",
    "finetune",
    "predict",
    "evaluate_accuracy",
]
