"""Kernel sparsity and entropy based CNN compression toolkit."""

from __future__ import annotations

from .analysis import KseReport, analyze_layer, analyze_model, read_reports, write_reports
from .clustering import CompressionConfig, compress_layer, compress_model, kernel_count
from .config import ToolkitSettings
from .dataset import LabeledDataset, load_dataset, save_dataset
from .engine import count_flops, expand_model, forward_compressed, forward_dense
from .enums import IndicatorKind, LayerKind
from .errors import (
    BlobMismatchError,
    BudgetError,
    ConfigurationError,
    CorruptIndexError,
    DegenerateLayerError,
    EmptyDatasetError,
    InputValidationError,
    InvalidGeometryError,
    KseToolkitError,
    LayerError,
    ManifestError,
    ModelFormatError,
    ShapeError,
    StageError,
    TruncatedBlobError,
    UndefinedCorrelationError,
)
from .evaluation import EvalReport, evaluate_models
from .finetune import TrainConfig, evaluate_accuracy, finetune, sgd_step
from .interpret import StudyResult, correlation_study, spearman
from .logging_config import LoggerFactory
from .metrics import RatioReport, acceleration_ratio, compression_ratio, model_report
from .model import (
    CompressedLayer,
    LayerSpec,
    ModelGraph,
    load_compressed,
    load_dense,
    load_model,
    save_compressed,
    save_dense,
)
from .render import ReportRenderer
from .structure import BaseStructure
from .tensor import ConvGeometry, FeatureStack, WeightTensor

__all__ = [
    # Errors
    "KseToolkitError",
    "ConfigurationError",
    "InputValidationError",
    "ShapeError",
    "InvalidGeometryError",
    "ModelFormatError",
    "ManifestError",
    "TruncatedBlobError",
    "BlobMismatchError",
    "CorruptIndexError",
    "DegenerateLayerError",
    "BudgetError",
    "StageError",
    "UndefinedCorrelationError",
    "EmptyDatasetError",
    "LayerError",
    # Infrastructure
    "LoggerFactory",
    "ToolkitSettings",
    "ReportRenderer",
    "BaseStructure",
    "LayerKind",
    "IndicatorKind",
    # Tensors and models
    "ConvGeometry",
    "WeightTensor",
    "FeatureStack",
    "CompressedLayer",
    "LayerSpec",
    "ModelGraph",
    "save_dense",
    "load_dense",
    "save_compressed",
    "load_compressed",
    "load_model",
    "LabeledDataset",
    "save_dataset",
    "load_dataset",
    # Pipeline
    "KseReport",
    "analyze_layer",
    "analyze_model",
    "write_reports",
    "read_reports",
    "CompressionConfig",
    "kernel_count",
    "compress_layer",
    "compress_model",
    "forward_dense",
    "forward_compressed",
    "expand_model",
    "count_flops",
    "compression_ratio",
    "acceleration_ratio",
    "RatioReport",
    "model_report",
    "EvalReport",
    "evaluate_models",
    "TrainConfig",
    "sgd_step",
    "finetune",
    "evaluate_accuracy",
    "StudyResult",
    "spearman",
    "correlation_study",
]
