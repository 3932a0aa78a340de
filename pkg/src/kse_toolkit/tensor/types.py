"""Dense tensor containers.

All containers are frozen dataclasses over read-only, C-contiguous
``float32`` arrays, so they can be shared between workers without copies
or locks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InputValidationError, InvalidGeometryError, ShapeError


def _frozen_float32(data: ArrayLike, ndim: int, name: str) -> np.ndarray:
    """Return a read-only float32 copy of ``data`` after shape/finiteness checks."""
    array = np.array(data, dtype=np.float32, order="C", copy=True)
    if array.ndim != ndim:
        raise ShapeError(
            f"{name} expects a {ndim}-D array, got shape {array.shape}",
            context={"shape": array.shape},
        )
    if any(dim < 1 for dim in array.shape):
        raise ShapeError(f"{name} dimensions must all be >= 1, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputValidationError(f"{name} contains NaN or Inf values")
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class ConvGeometry:
    """Stride and zero-padding of a 2D convolution.

    Attributes
    ----------
    stride : tuple[int, int]
        Step per axis, ``>= 1``.
    padding : tuple[int, int]
        Zero-padding per axis, ``>= 0``.
    """

    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        stride = tuple(int(s) for s in self.stride)
        padding = tuple(int(p) for p in self.padding)
        if len(stride) != 2 or len(padding) != 2:
            raise InputValidationError("stride and padding need one value per axis")
        if min(stride) < 1:
            raise InputValidationError(f"stride must be >= 1, got {stride}")
        if min(padding) < 0:
            raise InputValidationError(f"padding must be >= 0, got {padding}")
        object.__setattr__(self, "stride", stride)
        object.__setattr__(self, "padding", padding)

    @classmethod
    def square(cls, stride: int = 1, padding: int = 0) -> ConvGeometry:
        """Return a geometry with identical settings on both axes."""
        return cls(stride=(stride, stride), padding=(padding, padding))

    def output_size(self, height: int, width: int, kernel_h: int, kernel_w: int) -> tuple[int, int]:
        """Return ``(Hout, Wout)`` for an input and kernel size.

        ``floor((H + 2*pad - K) / stride) + 1`` per axis.

        Raises
        ------
        InvalidGeometryError
            If either output dimension is not positive.
        """
        out_h = (height + 2 * self.padding[0] - kernel_h) // self.stride[0] + 1
        out_w = (width + 2 * self.padding[1] - kernel_w) // self.stride[1] + 1
        if out_h < 1 or out_w < 1:
            raise InvalidGeometryError(
                f"kernel {kernel_h}x{kernel_w} does not fit padded input "
                f"{height}x{width} (padding {self.padding}, stride {self.stride})",
                context={"output": (out_h, out_w)},
            )
        return out_h, out_w


@dataclass(frozen=True, eq=False)
class WeightTensor:
    """Dense convolution weights ``W`` of shape ``N x C x Kh x Kw``.

    Attributes
    ----------
    data : np.ndarray
        Read-only float32 array; element ``[n, c]`` is the 2D kernel that
        connects input channel ``c`` to filter ``n``.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_float32(self.data, 4, "WeightTensor"))

    @property
    def n_filters(self) -> int:
        return int(self.data.shape[0])

    @property
    def in_channels(self) -> int:
        return int(self.data.shape[1])

    @property
    def kernel_h(self) -> int:
        return int(self.data.shape[2])

    @property
    def kernel_w(self) -> int:
        return int(self.data.shape[3])

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.n_filters, self.in_channels, self.kernel_h, self.kernel_w)

    def channel_slice(self, c: int) -> np.ndarray:
        """Return the ``N x Kh x Kw`` kernels attached to input channel ``c``."""
        if not 0 <= c < self.in_channels:
            raise InputValidationError(
                f"channel {c} out of range for {self.in_channels} input channels"
            )
        return self.data[:, c]


@dataclass(frozen=True, eq=False)
class FeatureStack:
    """Feature maps ``X`` of shape ``channels x height x width``.

    Attributes
    ----------
    data : np.ndarray
        Read-only float32 array.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_float32(self.data, 3, "FeatureStack"))

    @property
    def channels(self) -> int:
        return int(self.data.shape[0])

    @property
    def height(self) -> int:
        return int(self.data.shape[1])

    @property
    def width(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)

    def channel(self, c: int) -> np.ndarray:
        """Return the 2D map of channel ``c``."""
        if not 0 <= c < self.channels:
            raise InputValidationError(f"channel {c} out of range for {self.channels}")
        return self.data[c]


__all__ = ["ConvGeometry", "WeightTensor", "FeatureStack"]
