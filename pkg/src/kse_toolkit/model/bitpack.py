"""Fixed-width bit packing of kernel index columns."""

from __future__ import annotations

import numpy as np

from ..errors import CorruptIndexError, TruncatedBlobError


def index_bits(q_c: int) -> int:
    """Return ``ceil(log2 q_c)``, the on-disk width of one index (0 when ``q_c <= 1``)."""
    return max(int(q_c) - 1, 0).bit_length()


def packed_index_bytes(n_filters: int, q_c: int) -> int:
    """Return the byte length of one channel's packed index stream."""
    return (n_filters * index_bits(q_c) + 7) // 8


def pack_indices(column: np.ndarray, q_c: int) -> bytes:
    """Pack 1-based indices MSB-first at ``index_bits(q_c)`` bits each.

    The stream is zero-padded to a whole byte.

    Parameters
    ----------
    column : np.ndarray
        Index entries ``I_{n,c}`` in ``[1, q_c]``.
    q_c : int
        Channel kernel budget.

    Returns
    -------
    bytes
        Packed stream; empty when ``q_c <= 1``.
    """
    width = index_bits(q_c)
    if width == 0:
        return b""
    values = np.asarray(column, dtype=np.int64) - 1
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    bits = ((values[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1)).tobytes()


def unpack_indices(stream: bytes, n_filters: int, q_c: int) -> np.ndarray:
    """Inverse of :func:`pack_indices`.

    Parameters
    ----------
    stream : bytes
        Packed stream of exactly ``packed_index_bytes(n_filters, q_c)`` bytes.
    n_filters : int
        Number of entries to decode.
    q_c : int
        Channel kernel budget.

    Returns
    -------
    np.ndarray
        1-based int32 indices. All ones when ``q_c == 1``, zeros when
        ``q_c == 0``.

    Raises
    ------
    TruncatedBlobError
        If the stream is shorter than required.
    CorruptIndexError
        If a decoded index exceeds ``q_c``.
    """
    if q_c == 0:
        return np.zeros(n_filters, dtype=np.int32)
    width = index_bits(q_c)
    if width == 0:
        return np.ones(n_filters, dtype=np.int32)
    expected = packed_index_bytes(n_filters, q_c)
    if len(stream) < expected:
        raise TruncatedBlobError(
            f"index stream has {len(stream)} bytes, expected {expected}"
        )
    bits = np.unpackbits(np.frombuffer(stream[:expected], dtype=np.uint8))
    bits = bits[: n_filters * width].reshape(n_filters, width).astype(np.int64)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    values = bits @ weights + 1
    if np.any(values > q_c):
        raise CorruptIndexError(
            f"decoded index {int(values.max())} exceeds kernel budget {q_c}",
            context={"q_c": q_c},
        )
    return values.astype(np.int32)


__all__ = ["index_bits", "packed_index_bytes", "pack_indices", "unpack_indices"]
