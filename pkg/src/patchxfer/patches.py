"""Overlapping patch extraction (unfold) and overlap-add reconstruction (fold).

A patch row flattens its window channel-major, row-major within each
channel, matching the tensor layout; patch rows are enumerated row-major
over window origins on the zero-padded grid. Both orders are contracts:
every index in the matcher refers to them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import GeometryError, ShapeError
from .tensor import Tensor, tensor_from_f64


@dataclass(frozen=True)
class PatchGeometry:
    """Square window of ``window`` pixels, moved by ``stride``, over an
    input zero-padded by ``pad`` on all sides."""

    window: int
    stride: int
    pad: int

    def __post_init__(self):
        if self.window < 1:
            raise GeometryError(f"window must be >= 1, got {self.window}")
        if self.stride < 1:
            raise GeometryError(f"stride must be >= 1, got {self.stride}")
        if not 0 <= self.pad < self.window:
            raise GeometryError(
                f"pad must satisfy 0 <= pad < window, got pad={self.pad} "
                f"window={self.window}"
            )

    def patches_along(self, n: int) -> int:
        span = n + 2 * self.pad - self.window
        if span < 0:
            raise GeometryError(
                f"window {self.window} larger than padded extent {n + 2 * self.pad}"
            )
        return span // self.stride + 1

    def scaled(self, m: int) -> "PatchGeometry":
        """Geometry for a feature map at ``m`` times the spatial scale."""
        return PatchGeometry(self.window * m, self.stride * m, self.pad * m)


def patch_count(height: int, width: int, g: PatchGeometry) -> tuple[int, int, int]:
    """(rows of origins, cols of origins, total patches) for an HxW plane."""
    n_h = g.patches_along(height)
    n_w = g.patches_along(width)
    return n_h, n_w, n_h * n_w


@dataclass(frozen=True)
class PatchSet:
    """Flattened patch matrix plus the geometry and source dims it came from.

    ``patches`` is (N, C*k*k); row i is window i in row-major origin order.
    The source dims are whatever plane the rows map onto when folded, so a
    gathered set can be retargeted at a different grid of identical layout.
    """

    patches: Tensor
    geometry: PatchGeometry
    channels: int
    height: int
    width: int

    def __post_init__(self):
        self.patches.require_rank(2, "patch matrix")
        n_h, n_w, n = patch_count(self.height, self.width, self.geometry)
        k = self.geometry.window
        if self.patches.shape != (n, self.channels * k * k):
            raise ShapeError(
                f"patch matrix {self.patches.shape} inconsistent with geometry "
                f"{self.geometry} over ({self.channels},{self.height},{self.width}): "
                f"expected ({n}, {self.channels * k * k})"
            )

    @property
    def count(self) -> int:
        return self.patches.shape[0]

    @property
    def grid(self) -> tuple[int, int]:
        n_h, n_w, _ = patch_count(self.height, self.width, self.geometry)
        return n_h, n_w

    @property
    def vector_length(self) -> int:
        return self.patches.shape[1]


def retarget(ps: PatchSet, channels: int, height: int, width: int) -> PatchSet:
    """Reinterpret the rows as windows over a different plane of the same
    grid layout (used after gathering textures onto the query grid)."""
    return replace(ps, channels=channels, height=height, width=width)


def unfold(t: Tensor, g: PatchGeometry) -> PatchSet:
    t.require_rank(3, "unfold input")
    c, h, w = t.shape
    n_h, n_w, _ = patch_count(h, w, g)
    k, s, p = g.window, g.stride, g.pad
    padded = np.pad(t.a, ((0, 0), (p, p), (p, p)))
    windows = sliding_window_view(padded, (k, k), axis=(1, 2))
    strided = windows[:, :: s, :: s][:, :n_h, :n_w]
    rows = strided.transpose(1, 2, 0, 3, 4).reshape(n_h * n_w, c * k * k)
    return PatchSet(
        patches=Tensor(np.ascontiguousarray(rows), copy=False),
        geometry=g,
        channels=c,
        height=h,
        width=w,
    )


def fold(ps: PatchSet) -> Tensor:
    """Overlap-add the windows and divide by per-pixel coverage.

    Padding regions are discarded. Pixels no window covers (possible when
    stride > window) come out as 0.
    """
    c, h, w = ps.channels, ps.height, ps.width
    k, s, p = ps.geometry.window, ps.geometry.stride, ps.geometry.pad
    n_h, n_w = ps.grid
    acc = np.zeros((c, h + 2 * p, w + 2 * p), dtype=np.float64)
    vals = (
        ps.patches.a.astype(np.float64)
        .reshape(n_h, n_w, c, k, k)
        .transpose(2, 0, 1, 3, 4)
    )
    for ky in range(k):
        for kx in range(k):
            acc[:, ky : ky + s * n_h : s, kx : kx + s * n_w : s] += vals[:, :, :, ky, kx]
    cov = coverage_counts(h, w, ps.geometry).astype(np.float64)
    core = acc[:, p : p + h, p : p + w]
    out = np.divide(core, cov, out=np.zeros_like(core), where=cov > 0)
    return tensor_from_f64(out)


def coverage_counts(height: int, width: int, g: PatchGeometry) -> np.ndarray:
    """How many windows cover each un-padded pixel."""
    k, s, p = g.window, g.stride, g.pad
    n_h, n_w, _ = patch_count(height, width, g)
    cov = np.zeros((height + 2 * p, width + 2 * p), dtype=np.int64)
    for ky in range(k):
        for kx in range(k):
            cov[ky : ky + s * n_h : s, kx : kx + s * n_w : s] += 1
    return cov[p : p + height, p : p + width]
