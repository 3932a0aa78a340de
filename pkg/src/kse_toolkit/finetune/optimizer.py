"""Momentum SGD over centroids (and optionally dense payloads)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..model import LayerSpec, ModelGraph
from ..tensor import WeightTensor
from .backward import ModelGradients
from .config import TrainConfig


@dataclass
class OptimizerState:
    """Velocity buffers keyed by ``(layer index, parameter name)``.

    One state belongs to one training run; it is updated in place.
    """

    velocity: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    steps: int = 0


def _update(
    state: OptimizerState,
    key: tuple[int, str],
    param: np.ndarray,
    grad: np.ndarray,
    cfg: TrainConfig,
    learning_rate: float,
) -> np.ndarray:
    value = np.asarray(param, dtype=np.float64)
    step = learning_rate * (np.asarray(grad, dtype=np.float64) + cfg.weight_decay * value)
    previous = state.velocity.get(key)
    velocity = step if previous is None else cfg.momentum * previous + step
    state.velocity[key] = velocity
    return value - velocity


def _step_layer(
    idx: int,
    layer: LayerSpec,
    grads_centroids: tuple[np.ndarray, ...] | None,
    grads_weights: np.ndarray | None,
    grads_bias: np.ndarray | None,
    cfg: TrainConfig,
    state: OptimizerState,
    learning_rate: float,
) -> LayerSpec:
    changes: dict[str, object] = {}
    if layer.compressed is not None and grads_centroids is not None:
        centroids = [
            _update(state, (idx, f"centroids.{c}"), current, grad, cfg, learning_rate)
            if current.size
            else current
            for c, (current, grad) in enumerate(zip(layer.compressed.centroids, grads_centroids))
        ]
        changes["compressed"] = layer.compressed.with_centroids(centroids)
    if cfg.train_dense and layer.weights is not None and grads_weights is not None:
        changes["weights"] = WeightTensor(
            _update(state, (idx, "weights"), layer.weights.data, grads_weights, cfg, learning_rate)
        )
    if cfg.train_dense and layer.bias is not None and grads_bias is not None:
        changes["bias"] = _update(state, (idx, "bias"), layer.bias, grads_bias, cfg, learning_rate)
    return replace(layer, **changes) if changes else layer


def sgd_step(
    model: ModelGraph,
    grads: ModelGradients,
    cfg: TrainConfig,
    state: OptimizerState | None = None,
    *,
    learning_rate: float | None = None,
) -> ModelGraph:
    """Apply one momentum SGD update and return the new model.

    ``v <- momentum * v + lr * (g + weight_decay * p)`` then ``p <- p - v``.
    Centroid values change; ``q`` vectors and index tables are carried over
    untouched. Dense weights and biases change only with ``train_dense``.

    Parameters
    ----------
    model : ModelGraph
        Current model.
    grads : ModelGradients
        Gradients keyed by layer index.
    cfg : TrainConfig
        Momentum, weight decay and the default learning rate.
    state : OptimizerState or None, default=None
        Velocity buffers; a fresh state is used when None.
    learning_rate : float or None, default=None
        Overrides ``cfg.learning_rate`` (used by the decay schedule).

    Returns
    -------
    ModelGraph
        Updated model.
    """
    state = state if state is not None else OptimizerState()
    rate = cfg.learning_rate if learning_rate is None else learning_rate
    updated = model
    for idx, layer_grads in sorted(grads.items()):
        layer = model.layers[idx]
        new_layer = _step_layer(
            idx,
            layer,
            layer_grads.centroids,
            layer_grads.weights,
            layer_grads.bias,
            cfg,
            state,
            rate,
        )
        if new_layer is not layer:
            updated = updated.with_layer(idx, new_layer)
    state.steps += 1
    return updated


__all__ = ["OptimizerState", "sgd_step"]
