"""Dense and compressed model files.

A model is stored as two files sharing a base path:

``<base>.manifest.json``
    Human-readable manifest: format tag, input shape, metadata and one entry
    per layer with its dimensions and byte offsets into the blob.
``<base>.bin``
    Little-endian blob. Dense weights and biases are ``float32``. A
    compressed layer section holds the ``q`` vector as ``uint16``, then the
    centroid floats of every channel in order, then one bit-packed index
    stream per channel (``ceil(log2 q_c)`` bits per entry, padded to a
    byte).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..enums import LayerKind
from ..errors import (
    BlobMismatchError,
    InputValidationError,
    ManifestError,
    ShapeError,
    StageError,
    TruncatedBlobError,
)
from ..tensor import ConvGeometry, WeightTensor
from ..utils import check_filepath, log
from .bitpack import pack_indices, packed_index_bytes, unpack_indices
from .layers import CompressedLayer, LayerSpec, ModelGraph

FORMAT_VERSION = 1
DENSE_FORMAT = "kse-dense"
COMPRESSED_FORMAT = "kse-compressed"
MANIFEST_SUFFIX = ".manifest.json"
BLOB_SUFFIX = ".bin"

_F32 = np.dtype("<f4")
_U16 = np.dtype("<u2")


class BlobSection(BaseModel):
    """Byte range inside the blob."""

    model_config = ConfigDict(extra="forbid")

    offset: int = Field(ge=0)
    length: int = Field(ge=0)


class CompressedSection(BaseModel):
    """Byte ranges of one compressed layer."""

    model_config = ConfigDict(extra="forbid")

    q: BlobSection
    centroids: BlobSection
    indices: list[BlobSection]


class ManifestLayer(BaseModel):
    """One layer entry of the manifest."""

    model_config = ConfigDict(extra="forbid")

    kind: LayerKind
    name: str
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)
    compress_exempt: bool = False
    source: int = -1
    pool_size: int | None = None
    payload: Literal["dense", "compressed"] | None = None
    dims: tuple[int, int, int, int] | None = None
    weights: BlobSection | None = None
    compressed: CompressedSection | None = None
    bias: BlobSection | None = None


class Manifest(BaseModel):
    """Top-level manifest document."""

    model_config = ConfigDict(extra="forbid")

    format: Literal["kse-dense", "kse-compressed"]
    version: int
    blob: str
    blob_bytes: int = Field(ge=0)
    input_shape: tuple[int, int, int]
    metadata: dict[str, str] = Field(default_factory=dict)
    layers: list[ManifestLayer]


def model_paths(path: str | Path) -> tuple[Path, Path]:
    """Return ``(manifest_path, blob_path)`` for a base path.

    A path ending in ``.manifest.json`` or ``.bin`` is accepted and mapped
    back to its base.
    """
    text = str(path)
    for suffix in (MANIFEST_SUFFIX, BLOB_SUFFIX):
        if text.endswith(suffix):
            text = text[: -len(suffix)]
            break
    return Path(text + MANIFEST_SUFFIX), Path(text + BLOB_SUFFIX)


class _BlobWriter:
    """Append-only byte buffer that hands out sections."""

    def __init__(self) -> None:
        self._chunks: list[bytes] = []
        self._size = 0

    def append(self, payload: bytes) -> BlobSection:
        section = BlobSection(offset=self._size, length=len(payload))
        self._chunks.append(payload)
        self._size += len(payload)
        return section

    def floats(self, array: np.ndarray) -> BlobSection:
        return self.append(np.ascontiguousarray(array, dtype=_F32).tobytes())

    @property
    def size(self) -> int:
        return self._size

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class _BlobReader:
    """Bounds-checked access to blob sections."""

    def __init__(self, payload: bytes) -> None:
        self._payload = payload

    def read(self, section: BlobSection, what: str) -> bytes:
        end = section.offset + section.length
        if end > len(self._payload):
            raise TruncatedBlobError(
                f"{what} needs bytes [{section.offset}, {end}) but the blob has "
                f"{len(self._payload)}",
                context={"section": what},
            )
        return self._payload[section.offset : end]

    def floats(self, section: BlobSection, count: int, what: str) -> np.ndarray:
        if section.length != count * _F32.itemsize:
            raise BlobMismatchError(
                f"{what} spans {section.length} bytes but its dims require "
                f"{count * _F32.itemsize}",
                context={"section": what},
            )
        return np.frombuffer(self.read(section, what), dtype=_F32).astype(np.float32)


def _layer_entry(layer: LayerSpec) -> ManifestLayer:
    return ManifestLayer(
        kind=layer.kind,
        name=layer.name,
        stride=layer.geometry.stride,
        padding=layer.geometry.padding,
        compress_exempt=layer.compress_exempt,
        source=layer.source,
        pool_size=layer.pool_size,
    )


def _write_compressed(layer: CompressedLayer, blob: _BlobWriter) -> CompressedSection:
    q_section = blob.append(np.asarray(layer.q, dtype=_U16).tobytes())
    centroid_section = blob.floats(
        np.concatenate([stack.reshape(-1) for stack in layer.centroids])
    )
    indices = [
        blob.append(pack_indices(layer.index_table[:, c], int(q_c)))
        for c, q_c in enumerate(layer.q.tolist())
    ]
    return CompressedSection(q=q_section, centroids=centroid_section, indices=indices)


def _read_compressed(
    entry: ManifestLayer, reader: _BlobReader, dims: tuple[int, int, int, int]
) -> CompressedLayer:
    n, c_in, kh, kw = dims
    section = entry.compressed
    assert section is not None
    if section.q.length != c_in * _U16.itemsize or len(section.indices) != c_in:
        raise BlobMismatchError(
            f"layer {entry.name} q section does not match {c_in} input channels"
        )
    q = np.frombuffer(reader.read(section.q, f"{entry.name}.q"), dtype=_U16).astype(np.int64)
    if np.any(q > n):
        raise BlobMismatchError(f"layer {entry.name} has q_c above N = {n}")
    flat = reader.floats(section.centroids, int(q.sum()) * kh * kw, f"{entry.name}.centroids")
    bounds = np.concatenate([[0], np.cumsum(q * kh * kw)])
    centroids = [
        flat[bounds[c] : bounds[c + 1]].reshape(int(q[c]), kh, kw) for c in range(c_in)
    ]
    table = np.zeros((n, c_in), dtype=np.int32)
    for c in range(c_in):
        index_section = section.indices[c]
        if index_section.length != packed_index_bytes(n, int(q[c])):
            raise BlobMismatchError(
                f"layer {entry.name} channel {c} index stream has {index_section.length} "
                f"bytes, expected {packed_index_bytes(n, int(q[c]))}"
            )
        stream = reader.read(index_section, f"{entry.name}.indices[{c}]")
        table[:, c] = unpack_indices(stream, n, int(q[c]))
    return CompressedLayer(
        q=q, centroids=tuple(centroids), index_table=table, n_filters=n, kernel_h=kh, kernel_w=kw
    )


def _save(model: ModelGraph, path: str | Path, fmt: str) -> Path:
    manifest_path, blob_path = model_paths(path)
    blob = _BlobWriter()
    entries: list[ManifestLayer] = []
    for layer in model.layers:
        entry = _layer_entry(layer)
        if layer.weight_bearing:
            entry.dims = layer.dense_shape
            if layer.weights is not None:
                entry.payload = "dense"
                entry.weights = blob.floats(layer.weights.data)
            else:
                assert layer.compressed is not None
                entry.payload = "compressed"
                entry.compressed = _write_compressed(layer.compressed, blob)
            if layer.bias is not None:
                entry.bias = blob.floats(layer.bias)
        entries.append(entry)

    manifest = Manifest(
        format=fmt,  # type: ignore[arg-type]
        version=FORMAT_VERSION,
        blob=blob_path.name,
        blob_bytes=blob.size,
        input_shape=model.input_shape,
        metadata=dict(model.metadata),
        layers=entries,
    )
    check_filepath(filepath=manifest_path)
    blob_path.write_bytes(blob.getvalue())
    manifest_path.write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    log(f"Saved {fmt} model with {len(model.layers)} layers to {manifest_path}", level=logging.DEBUG)
    return manifest_path


def _load(path: str | Path, fmt: str) -> ModelGraph:
    manifest_path, _ = model_paths(path)
    try:
        document = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    try:
        manifest = Manifest.model_validate(document)
    except ValidationError as exc:
        raise ManifestError(
            f"manifest {manifest_path} is malformed: {exc.error_count()} problem(s)",
            context={"errors": exc.errors(include_url=False)},
        ) from exc
    if manifest.format != fmt:
        raise StageError(
            f"{manifest_path} holds a {manifest.format} model, expected {fmt}",
            context={"format": manifest.format},
        )
    if manifest.version != FORMAT_VERSION:
        raise ManifestError(f"unsupported manifest version {manifest.version}")

    blob_path = manifest_path.parent / manifest.blob
    payload = blob_path.read_bytes()
    if len(payload) < manifest.blob_bytes:
        raise TruncatedBlobError(
            f"blob {blob_path} has {len(payload)} bytes, manifest claims {manifest.blob_bytes}"
        )
    if len(payload) > manifest.blob_bytes:
        raise BlobMismatchError(
            f"blob {blob_path} has {len(payload)} bytes, manifest claims {manifest.blob_bytes}"
        )
    reader = _BlobReader(payload)

    layers: list[LayerSpec] = []
    for entry in manifest.layers:
        try:
            layers.append(_read_layer(entry, reader, fmt))
        except (ShapeError, InputValidationError) as exc:
            # a well-formed manifest can still describe an impossible layer
            raise BlobMismatchError(
                f"layer {entry.name} is inconsistent: {exc}", context={"layer": entry.name}
            ) from exc
    try:
        return ModelGraph(
            layers=tuple(layers),
            input_shape=manifest.input_shape,
            metadata=manifest.metadata,
        )
    except (ShapeError, InputValidationError) as exc:
        raise BlobMismatchError(f"model in {manifest_path} is inconsistent: {exc}") from exc


def _read_layer(entry: ManifestLayer, reader: _BlobReader, fmt: str) -> LayerSpec:
    weights = compressed = bias = None
    if entry.kind.weight_bearing:
        if entry.dims is None or entry.payload is None:
            raise ManifestError(f"layer {entry.name} lacks dims or payload type")
        if fmt == DENSE_FORMAT and entry.payload != "dense":
            raise ManifestError(f"dense model layer {entry.name} has a compressed payload")
        n, c_in, kh, kw = entry.dims
        if entry.payload == "dense":
            if entry.weights is None:
                raise ManifestError(f"layer {entry.name} lacks a weights section")
            flat = reader.floats(entry.weights, n * c_in * kh * kw, f"{entry.name}.weights")
            weights = WeightTensor(flat.reshape(n, c_in, kh, kw))
        else:
            if entry.compressed is None:
                raise ManifestError(f"layer {entry.name} lacks a compressed section")
            compressed = _read_compressed(entry, reader, entry.dims)
        if entry.bias is not None:
            bias = reader.floats(entry.bias, n, f"{entry.name}.bias")
    return LayerSpec(
        kind=entry.kind,
        name=entry.name,
        geometry=ConvGeometry(stride=entry.stride, padding=entry.padding),
        weights=weights,
        compressed=compressed,
        bias=bias,
        compress_exempt=entry.compress_exempt,
        source=entry.source,
        pool_size=entry.pool_size,
    )


def save_dense(m: ModelGraph, path: str | Path) -> Path:
    """Write a dense model.

    Parameters
    ----------
    m : ModelGraph
        Model whose weight-bearing layers all carry dense payloads.
    path : str or Path
        Base path; ``.manifest.json`` and ``.bin`` are appended.

    Returns
    -------
    Path
        Path of the written manifest.

    Raises
    ------
    StageError
        If any layer carries a compressed payload.
    """
    if not m.is_dense:
        raise StageError("save_dense requires a model without compressed layers")
    return _save(m, path, DENSE_FORMAT)


def load_dense(path: str | Path) -> ModelGraph:
    """Read a model written by :func:`save_dense`.

    Raises
    ------
    ManifestError
        Malformed manifest.
    TruncatedBlobError
        Blob shorter than the manifest claims.
    BlobMismatchError
        Manifest dimensions disagree with the blob.
    """
    return _load(path, DENSE_FORMAT)


def save_compressed(m: ModelGraph, path: str | Path) -> Path:
    """Write a compressed model.

    Exempt layers keep dense payloads; every other weight-bearing layer must
    be compressed.

    Raises
    ------
    StageError
        If a non-exempt weight-bearing layer is still dense.
    """
    dense = [layer.name for _, layer in m.compressible_layers() if not layer.is_compressed]
    if dense:
        raise StageError(
            f"save_compressed found uncompressed layers: {', '.join(dense)}",
            context={"layers": dense},
        )
    return _save(m, path, COMPRESSED_FORMAT)


def load_compressed(path: str | Path) -> ModelGraph:
    """Read a model written by :func:`save_compressed`.

    Raises
    ------
    CorruptIndexError
        If a stored index lies outside ``[1, q_c]``.
    ManifestError, TruncatedBlobError, BlobMismatchError
        As for :func:`load_dense`.
    """
    return _load(path, COMPRESSED_FORMAT)


def load_model(path: str | Path) -> ModelGraph:
    """Read a dense or compressed model, dispatching on the manifest format."""
    manifest_path, _ = model_paths(path)
    try:
        fmt = json.loads(manifest_path.read_text(encoding="utf-8")).get("format")
    except (json.JSONDecodeError, AttributeError) as exc:
        raise ManifestError(f"manifest {manifest_path} is not a JSON object") from exc
    if fmt == COMPRESSED_FORMAT:
        return load_compressed(path)
    return load_dense(path)


def compressed_section_bytes(layer: CompressedLayer) -> int:
    """Return the on-disk byte size of a compressed layer section (bias excluded)."""
    n, c_in, kh, kw = layer.dense_shape
    return (
        c_in * _U16.itemsize
        + layer.total_kernels * kh * kw * _F32.itemsize
        + sum(packed_index_bytes(n, int(q_c)) for q_c in layer.q.tolist())
    )


__all__ = [
    "save_dense",
    "load_dense",
    "save_compressed",
    "load_compressed",
    "load_model",
    "model_paths",
    "compressed_section_bytes",
]
