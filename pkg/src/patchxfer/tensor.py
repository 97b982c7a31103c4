"""Dense float32 tensor type and the TNSR v1 interchange format.

A Tensor is the universal carrier for images, feature maps and patch
matrices: channel-major, row-major within a channel, always float32,
always finite. Rank-3 tensors are (channels, height, width).

TNSR v1 layout (all integers little-endian):

    magic "TNSR" | u32 version=1 | u8 dtype (0 = f32) | u8 rank |
    rank x u64 dimension sizes | payload, row-major f32

No padding, no alignment.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import NonFiniteError, ShapeError, TensorFormatError

_MAGIC = b"TNSR"
_VERSION = 1
_DTYPE_F32 = 0


class Tensor:
    """Immutable dense float32 array.

    Construction rejects rank 0, zero-sized dimensions and non-finite
    values, so any Tensor in circulation satisfies the module invariants.
    The wrapped ndarray is marked read-only; Tensors are safe to share
    across threads.
    """

    __slots__ = ("_a",)

    def __init__(self, array, *, copy: bool = True):
        # copy=False still copies when dtype/layout conversion requires it
        a = np.array(array, dtype=np.float32, order="C", copy=True if copy else None)
        if a.ndim == 0:
            raise ShapeError("tensor rank must be at least 1")
        if min(a.shape) == 0:
            raise ShapeError(f"zero-sized dimension in shape {a.shape}")
        # min/max propagate NaN and expose infinities without a bool temporary
        if not (np.isfinite(a.min()) and np.isfinite(a.max())):
            raise NonFiniteError(f"non-finite values in tensor of shape {a.shape}")
        a.setflags(write=False)
        self._a = a

    @property
    def a(self) -> np.ndarray:
        """The underlying read-only float32 ndarray."""
        return self._a

    @property
    def shape(self) -> tuple[int, ...]:
        return self._a.shape

    @property
    def rank(self) -> int:
        return self._a.ndim

    @property
    def size(self) -> int:
        return self._a.size

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"

    def require_rank(self, rank: int, what: str = "tensor") -> "Tensor":
        if self.rank != rank:
            raise ShapeError(f"{what} must have rank {rank}, got shape {self.shape}")
        return self

    def require_channels(self, channels: int, what: str = "tensor") -> "Tensor":
        self.require_rank(3, what)
        if self.shape[0] != channels:
            raise ShapeError(
                f"{what} must have {channels} channels, got shape {self.shape}"
            )
        return self


def tensor_from_f64(array: np.ndarray) -> Tensor:
    """Round float64 intermediates to the f32 storage type in one step."""
    return Tensor(np.asarray(array, dtype=np.float64).astype(np.float32), copy=False)


def to_luma_bt601(img: Tensor) -> Tensor:
    """Full-range BT.601 luma: Y = 0.299 R + 0.587 G + 0.114 B.

    Input is a (3, H, W) tensor with values in [0, 1]; output is (1, H, W),
    clipped into [0, 1] to absorb float round-off of the convex weights.
    """
    img.require_channels(3, "to_luma_bt601 input")
    r, g, b = img.a.astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    return tensor_from_f64(np.clip(y, 0.0, 1.0)[None, :, :])


def save_tensor(t: Tensor, path: str | Path) -> None:
    Path(path).write_bytes(tensor_to_bytes(t))


def load_tensor(path: str | Path) -> Tensor:
    return tensor_from_bytes(Path(path).read_bytes())


def tensor_to_bytes(t: Tensor) -> bytes:
    header = _MAGIC + struct.pack("<IBB", _VERSION, _DTYPE_F32, t.rank)
    dims = struct.pack(f"<{t.rank}Q", *t.shape)
    payload = t.a.astype("<f4", copy=False).tobytes(order="C")
    return header + dims + payload


def tensor_from_bytes(data: bytes) -> Tensor:
    if data[:4] != _MAGIC:
        raise TensorFormatError("bad magic", field="magic")
    if len(data) < 10:
        raise TensorFormatError("truncated header", field="header")
    version, dtype, rank = struct.unpack_from("<IBB", data, 4)
    if version != _VERSION:
        raise TensorFormatError(f"unsupported version {version}", field="version")
    if dtype != _DTYPE_F32:
        raise TensorFormatError(f"unsupported dtype code {dtype}", field="dtype")
    if rank == 0:
        raise TensorFormatError("rank must be at least 1", field="rank")
    dims_end = 10 + 8 * rank
    if len(data) < dims_end:
        raise TensorFormatError("truncated dimension list", field="dims")
    shape: Iterable[int] = struct.unpack_from(f"<{rank}Q", data, 10)
    if min(shape) == 0:
        raise TensorFormatError(f"zero-sized dimension in {tuple(shape)}", field="dims")
    # Python-int product: a hostile header cannot wrap the size check
    count = math.prod(int(d) for d in shape)
    expected = dims_end + 4 * count
    if len(data) != expected:
        raise TensorFormatError(
            f"payload holds {len(data) - dims_end} bytes, expected {4 * count}",
            field="payload",
        )
    values = np.frombuffer(data, dtype="<f4", count=count, offset=dims_end)
    return Tensor(values.reshape(tuple(int(d) for d in shape)))
