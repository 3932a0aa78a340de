"""Labeled image datasets stored as blob records.

A dataset directory holds ``records.json`` and one little-endian float32
blob per image::

    {"format": "kse-dataset", "version": 1,
     "records": [{"file": "000000.bin", "label": 2, "shape": [1, 8, 8]}, ...]}
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import (
    BlobMismatchError,
    EmptyDatasetError,
    InputValidationError,
    ManifestError,
    ShapeError,
    TruncatedBlobError,
)
from .tensor import FeatureStack
from .utils import check_filepath, log

RECORDS_FILE = "records.json"
_F32 = np.dtype("<f4")


class DatasetRecord(BaseModel):
    """One image entry of ``records.json``."""

    model_config = ConfigDict(extra="forbid")

    file: str
    label: int
    shape: tuple[int, int, int]


class DatasetManifest(BaseModel):
    """Top-level ``records.json`` document."""

    model_config = ConfigDict(extra="forbid")

    format: Literal["kse-dataset"] = "kse-dataset"
    version: int = 1
    records: list[DatasetRecord] = Field(default_factory=list)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Images of one shape with integer class labels.

    Attributes
    ----------
    images : np.ndarray
        ``M x C x H x W`` float32 array, read-only.
    labels : np.ndarray
        Length-``M`` int64 array of class labels.
    """

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        images = np.array(self.images, dtype=np.float32, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if images.ndim != 4:
            raise ShapeError(f"images must be M x C x H x W, got {images.shape}")
        if images.shape[0] != labels.size:
            raise ShapeError(f"{images.shape[0]} images but {labels.size} labels")
        if not np.all(np.isfinite(images)):
            raise InputValidationError("dataset images contain NaN or Inf")
        images.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_images(
        cls, images: Sequence[FeatureStack | np.ndarray], labels: Sequence[int] | None = None
    ) -> LabeledDataset:
        """Stack individual images; missing labels default to 0."""
        arrays = [image.data if isinstance(image, FeatureStack) else np.asarray(image) for image in images]
        if not arrays:
            raise EmptyDatasetError("no images given")
        stacked = np.stack([a if a.ndim == 3 else a[None] for a in arrays])
        return cls(stacked, np.zeros(len(arrays)) if labels is None else np.asarray(labels))

    def __len__(self) -> int:
        return int(self.labels.size)

    def __iter__(self) -> Iterator[tuple[np.ndarray, int]]:
        for idx in range(len(self)):
            yield self.images[idx], int(self.labels[idx])

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.images.shape[1:])  # type: ignore[return-value]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, indices: Sequence[int] | np.ndarray) -> LabeledDataset:
        """Return the examples at ``indices``."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.images[idx], self.labels[idx])


def save_dataset(dataset: LabeledDataset, directory: str | Path) -> Path:
    """Write ``records.json`` and one blob per image; return the records path."""
    root = Path(directory)
    records = []
    for idx, (image, label) in enumerate(dataset):
        name = f"{idx:06d}.bin"
        target = check_filepath(filepath=root / name)
        target.write_bytes(np.ascontiguousarray(image, dtype=_F32).tobytes())
        records.append(DatasetRecord(file=name, label=label, shape=dataset.image_shape))
    manifest_path = check_filepath(filepath=root / RECORDS_FILE)
    manifest_path.write_text(
        json.dumps(DatasetManifest(records=records).model_dump(mode="json"), indent=2) + "\n",
        encoding="utf-8",
    )
    log(f"Saved {len(records)} images to {root}", level=logging.DEBUG)
    return manifest_path


def load_dataset(directory: str | Path) -> LabeledDataset:
    """Read a dataset written by :func:`save_dataset`.

    Raises
    ------
    FileNotFoundError
        If ``records.json`` or an image blob is missing.
    ManifestError
        If ``records.json`` is malformed.
    EmptyDatasetError
        If the dataset has no records.
    TruncatedBlobError, BlobMismatchError
        If an image blob is shorter or longer than its shape requires.
    ShapeError
        If records have different shapes.
    """
    root = Path(directory)
    manifest_path = root / RECORDS_FILE
    try:
        manifest = DatasetManifest.model_validate(json.loads(manifest_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ManifestError(f"{manifest_path} is malformed: {exc}") from exc
    if not manifest.records:
        raise EmptyDatasetError(f"dataset {root} has no records")

    images = []
    for record in manifest.records:
        payload = (root / record.file).read_bytes()
        expected = int(np.prod(record.shape)) * _F32.itemsize
        if len(payload) < expected:
            raise TruncatedBlobError(
                f"{record.file} has {len(payload)} bytes, shape {record.shape} needs {expected}"
            )
        if len(payload) > expected:
            raise BlobMismatchError(
                f"{record.file} has {len(payload)} bytes, shape {record.shape} needs {expected}"
            )
        images.append(np.frombuffer(payload, dtype=_F32).reshape(record.shape))
    shapes = {image.shape for image in images}
    if len(shapes) != 1:
        raise ShapeError(f"dataset {root} mixes image shapes {sorted(shapes)}")
    return LabeledDataset(np.stack(images), [record.label for record in manifest.records])


__all__ = [
    "LabeledDataset",
    "DatasetRecord",
    "DatasetManifest",
    "save_dataset",
    "load_dataset",
    "RECORDS_FILE",
]
