"""Accuracy and agreement between a dense model and its compressed form."""

from __future__ import annotations

import numpy as np

from .dataset import LabeledDataset
from .engine import run_layers
from .errors import EmptyDatasetError, InputValidationError, ShapeError
from .model import ModelGraph
from .render import ReportRenderer
from .structure import BaseStructure, spec_field
from .workers import ordered_map


class EvalReport(BaseStructure):
    """Summary printed by the ``eval`` command."""

    examples: int = spec_field("examples")
    dense_accuracy: float | None = spec_field("dense_accuracy", default=None)
    compressed_accuracy: float | None = spec_field("compressed_accuracy", default=None)
    agreement: float | None = spec_field(
        "agreement", default=None, description="Fraction of examples with equal arg-max."
    )
    max_abs_diff: float | None = spec_field(
        "max_abs_diff", default=None, description="Largest absolute output difference."
    )

    def render(self, renderer: ReportRenderer | None = None) -> str:
        """Render the summary as text."""
        return (renderer or ReportRenderer()).render("eval_report.jinja", {"result": self})


def _outputs(model: ModelGraph, dataset: LabeledDataset, worker_count: int | None) -> np.ndarray:
    return np.stack(
        ordered_map(
            lambda image: run_layers(model, image, worker_count=1).reshape(-1),
            list(dataset.images),
            worker_count=worker_count,
        )
    )


def evaluate_models(
    dataset: LabeledDataset,
    m_dense: ModelGraph | None = None,
    m_compressed: ModelGraph | None = None,
    *,
    worker_count: int | None = 1,
) -> EvalReport:
    """Run one or both models over ``dataset``.

    Parameters
    ----------
    dataset : LabeledDataset
        Labeled examples.
    m_dense : ModelGraph or None, default=None
        Reference model.
    m_compressed : ModelGraph or None, default=None
        Compressed model; with both models given, agreement and the largest
        output difference are reported too.
    worker_count : int or None, default=1
        Threads for the per-example forward passes.

    Returns
    -------
    EvalReport
        Accuracies of the models that were given.

    Raises
    ------
    EmptyDatasetError
        If the dataset has no examples.
    ShapeError
        If the two models produce outputs of different sizes.
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("evaluation needs at least one example")
    if m_dense is None and m_compressed is None:
        raise InputValidationError("at least one model is required")
    dense_out = None if m_dense is None else _outputs(m_dense, dataset, worker_count)
    compressed_out = None if m_compressed is None else _outputs(m_compressed, dataset, worker_count)

    def accuracy(outputs: np.ndarray | None) -> float | None:
        if outputs is None:
            return None
        return float(np.mean(outputs.argmax(axis=1) == dataset.labels))

    agreement = max_abs_diff = None
    if dense_out is not None and compressed_out is not None:
        if dense_out.shape != compressed_out.shape:
            raise ShapeError(
                f"dense outputs {dense_out.shape} and compressed outputs {compressed_out.shape} differ"
            )
        agreement = float(np.mean(dense_out.argmax(axis=1) == compressed_out.argmax(axis=1)))
        max_abs_diff = float(np.max(np.abs(dense_out - compressed_out)))
    return EvalReport(
        examples=len(dataset),
        dense_accuracy=accuracy(dense_out),
        compressed_accuracy=accuracy(compressed_out),
        agreement=agreement,
        max_abs_diff=max_abs_diff,
    )


__all__ = ["EvalReport", "evaluate_models"]
