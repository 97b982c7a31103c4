"""PSNR and SSIM on the [0, 1] value domain.

SSIM follows the universal reference parameters: 11x11 Gaussian window
with sigma 1.5, k1 = 0.01, k2 = 0.03, dynamic range 1.0, mean of the
per-window map. Both metrics accumulate in float64.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .tensor import Tensor, to_luma_bt601

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: Tensor, b: Tensor, on_y: bool = False) -> float:
    """10*log10(1/mse) in dB; identical inputs give +inf."""
    if a.shape != b.shape:
        raise ShapeError(f"psnr operands differ in shape: {a.shape} vs {b.shape}")
    if on_y:
        a, b = to_luma_bt601(a), to_luma_bt601(b)
    diff = a.a.astype(np.float64) - b.a.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_taps(n: int, sigma: float) -> np.ndarray:
    x = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _window_means(plane: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable valid-mode Gaussian window means."""
    rows = sliding_window_view(plane, len(taps), axis=0) @ taps
    return sliding_window_view(rows, len(taps), axis=1) @ taps


def ssim(a: Tensor, b: Tensor) -> float:
    """Mean local SSIM of two single-channel (1, H, W) tensors."""
    a.require_channels(1, "ssim input")
    b.require_channels(1, "ssim input")
    if a.shape != b.shape:
        raise ShapeError(f"ssim operands differ in shape: {a.shape} vs {b.shape}")
    h, w = a.shape[1:]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(
            f"ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )
    x = a.a[0].astype(np.float64)
    y = b.a[0].astype(np.float64)
    taps = _gaussian_taps(SSIM_WINDOW, SSIM_SIGMA)

    mu_x = _window_means(x, taps)
    mu_y = _window_means(y, taps)
    var_x = _window_means(x * x, taps) - mu_x * mu_x
    var_y = _window_means(y * y, taps) - mu_y * mu_y
    cov = _window_means(x * y, taps) - mu_x * mu_y

    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))
