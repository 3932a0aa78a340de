"""Model graph, compressed payloads and the manifest + blob file format."""

from __future__ import annotations

from .bitpack import index_bits, pack_indices, packed_index_bytes, unpack_indices
from .io import (
    compressed_section_bytes,
    load_compressed,
    load_dense,
    load_model,
    model_paths,
    save_compressed,
    save_dense,
)
from .layers import CompressedLayer, LayerSpec, ModelGraph

__all__ = [
    "CompressedLayer",
    "LayerSpec",
    "ModelGraph",
    "save_dense",
    "load_dense",
    "save_compressed",
    "load_compressed",
    "load_model",
    "model_paths",
    "compressed_section_bytes",
    "index_bits",
    "packed_index_bytes",
    "pack_indices",
    "unpack_indices",
]
