"""Bicubic and bilinear resampling.

Keys cubic convolution kernel with a = -0.5 (Catmull-Rom), half-pixel
coordinate mapping (align-corners false), sample coordinates clamped at
the borders. These conventions change border values, so they are fixed
here once and shared by every caller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError, ShapeError
from .tensor import Tensor, tensor_from_f64

_A = -0.5


@dataclass(frozen=True)
class ScaleSpec:
    """Axis-uniform rational scale factor numerator/denominator."""

    numerator: int
    denominator: int = 1

    def __post_init__(self):
        if self.numerator < 1 or self.denominator < 1:
            raise ParameterError(
                f"scale factor must be positive, got {self.numerator}/{self.denominator}"
            )

    @property
    def is_identity(self) -> bool:
        return self.numerator == self.denominator

    def scaled_len(self, n: int) -> int:
        """round(n * factor), computed in exact integer arithmetic."""
        out = (2 * n * self.numerator + self.denominator) // (2 * self.denominator)
        if out < 1:
            raise ShapeError(f"scaled dimension of {n} by {self} is zero")
        return out


def _cubic_weights(t: np.ndarray) -> np.ndarray:
    """Weights of the four taps around fractional position t in [0, 1)."""
    # offsets of taps relative to floor(src): -1, 0, 1, 2
    d = np.stack([t + 1.0, t, 1.0 - t, 2.0 - t])
    ad = np.abs(d)
    near = (_A + 2.0) * ad**3 - (_A + 3.0) * ad**2 + 1.0
    far = _A * (ad**3 - 5.0 * ad**2 + 8.0 * ad - 4.0)
    return np.where(ad <= 1.0, near, np.where(ad < 2.0, far, 0.0))


def _linear_weights(t: np.ndarray) -> np.ndarray:
    return np.stack([1.0 - t, t])


def _axis_taps(n_in: int, n_out: int, kernel: str) -> tuple[np.ndarray, np.ndarray]:
    """Clamped tap indices (taps, n_out) and weights for one axis."""
    j = np.arange(n_out, dtype=np.float64)
    src = (j + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src)
    t = src - base
    if kernel == "cubic":
        weights = _cubic_weights(t)
        offsets = np.arange(-1, 3)
    elif kernel == "linear":
        weights = _linear_weights(t)
        offsets = np.arange(0, 2)
    else:
        raise ParameterError(f"unknown kernel {kernel!r}")
    idx = base.astype(np.int64)[None, :] + offsets[:, None]
    return np.clip(idx, 0, n_in - 1), weights


def _resize_axis(a: np.ndarray, n_out: int, axis: int, kernel: str) -> np.ndarray:
    idx, w = _axis_taps(a.shape[axis], n_out, kernel)
    out = np.zeros(a.shape[:axis] + (n_out,) + a.shape[axis + 1 :], dtype=np.float64)
    shape = [1] * a.ndim
    shape[axis] = n_out
    for m in range(idx.shape[0]):
        out += np.take(a, idx[m], axis=axis) * w[m].reshape(shape)
    return out


def resize_to(t: Tensor, out_h: int, out_w: int, kernel: str = "cubic") -> Tensor:
    """Resize a (C, H, W) tensor to exact output dimensions."""
    t.require_rank(3, "resize input")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"output dimensions must be positive, got {out_h}x{out_w}")
    a = t.a.astype(np.float64)
    if out_h != t.shape[1]:
        a = _resize_axis(a, out_h, axis=1, kernel=kernel)
    if out_w != t.shape[2]:
        a = _resize_axis(a, out_w, axis=2, kernel=kernel)
    return tensor_from_f64(a)


def bicubic_resize(t: Tensor, spec: ScaleSpec) -> Tensor:
    """Bicubic resize of a (C, H, W) tensor by a rational factor."""
    t.require_rank(3, "bicubic_resize input")
    if spec.is_identity:
        return t
    return resize_to(t, spec.scaled_len(t.shape[1]), spec.scaled_len(t.shape[2]))


def bilinear_resize(t: Tensor, out_h: int, out_w: int) -> Tensor:
    return resize_to(t, out_h, out_w, kernel="linear")


def down_up(t: Tensor, factor: int = 4) -> Tensor:
    """Bicubic downsample by ``factor`` then upsample back; shape-preserving.

    Dimensions not divisible by the factor are reflect-padded to the next
    multiple before resampling and cropped back afterwards.
    """
    t.require_rank(3, "down_up input")
    if factor < 1:
        raise ParameterError(f"down_up factor must be >= 1, got {factor}")
    if factor == 1:
        return t
    c, h, w = t.shape
    pad_h = (-h) % factor
    pad_w = (-w) % factor
    work = t
    if pad_h or pad_w:
        try:
            padded = np.pad(t.a, ((0, 0), (0, pad_h), (0, pad_w)), mode="reflect")
        except ValueError as e:
            raise GeometryError(f"image too small to pad for factor {factor}: {e}")
        work = Tensor(padded, copy=False)
    down = bicubic_resize(work, ScaleSpec(1, factor))
    up = bicubic_resize(down, ScaleSpec(factor, 1))
    if pad_h or pad_w:
        return Tensor(up.a[:, :h, :w])
    return up
