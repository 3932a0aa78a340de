"""Fine-tuning hyper-parameters."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError


class TrainConfig(BaseModel):
    """Settings of mini-batch SGD with momentum.

    By default only cluster centroids train; dense payloads and biases stay
    frozen unless ``train_dense`` is set.

    Examples
    --------
    >>> TrainConfig(learning_rate=0.01).momentum
    0.9
    >>> TrainConfig(momentum=1.0)
    Traceback (most recent call last):
    ...
    kse_toolkit.errors.ConfigurationError: momentum must lie in [0, 1), got 1.0
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=0.01, description="Step size.")
    momentum: float = Field(default=0.9, description="Velocity decay in [0, 1).")
    epochs: int = Field(default=5, description="Passes over the dataset.")
    batch_size: int = Field(default=16, description="Examples per update.")
    seed: int = Field(default=0, description="Seed of the shuffling order.")
    lr_decay_epochs: tuple[int, ...] = Field(
        default=(), description="Epoch counts after which the rate decays."
    )
    lr_decay_factor: float = Field(default=0.1, description="Multiplier applied at each decay.")
    weight_decay: float = Field(default=0.0, description="L2 penalty on trained parameters.")
    train_dense: bool = Field(default=False, description="Also train dense weights and biases.")

    @model_validator(mode="after")
    def _check_ranges(self) -> TrainConfig:
        if not self.learning_rate >= 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if any(epoch < 1 for epoch in self.lr_decay_epochs):
            raise ConfigurationError(
                f"lr_decay_epochs must be positive, got {list(self.lr_decay_epochs)}"
            )
        if not 0 < self.lr_decay_factor <= 1:
            raise ConfigurationError(
                f"lr_decay_factor must lie in (0, 1], got {self.lr_decay_factor}"
            )
        if not self.weight_decay >= 0:
            raise ConfigurationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        return self

    def learning_rate_at(self, epoch: int) -> float:
        """Return the rate used during ``epoch`` (0-based)."""
        decays = sum(1 for boundary in self.lr_decay_epochs if epoch >= boundary)
        return self.learning_rate * self.lr_decay_factor**decays


__all__ = ["TrainConfig"]
