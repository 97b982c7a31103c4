"""Sobel gradient density and the gradient feature extractor.

GD(I) = sqrt((K_x * I)^2 + (K_y * I)^2) per channel. Borders are handled
by edge replication: a constant image then has exactly zero response
everywhere and adding a constant never changes the map, which zero
padding would break at the borders. Responses accumulate in float64 in a
fixed kernel order so those cancellations are exact.
"""

from __future__ import annotations

import numpy as np

from .nn import WeightBank, conv3x3, relu, residual_block
from .tensor import Tensor, tensor_from_f64

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = np.array([[1, 2, 1], [0, 0, 0], [-1, -2, -1]], dtype=np.float64)


def _correlate3(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation with edge-replicated borders, float64."""
    h, w = plane.shape
    padded = np.pad(plane, 1, mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            k = kernel[dy, dx]
            if k != 0.0:
                out += k * padded[dy : dy + h, dx : dx + w]
    return out


def gradient_density(img: Tensor) -> Tensor:
    """Per-channel Sobel gradient magnitude; shape-preserving."""
    img.require_rank(3, "gradient_density input")
    planes = img.a.astype(np.float64)
    out = np.empty_like(planes)
    for c in range(planes.shape[0]):
        gx = _correlate3(planes[c], SOBEL_X)
        gy = _correlate3(planes[c], SOBEL_Y)
        out[c] = np.sqrt(gx * gx + gy * gy)
    return tensor_from_f64(out)


def grad_feature_extractor(g: Tensor, bank: WeightBank, channels: int = 64) -> Tensor:
    """Residual feature extractor over a gradient-density map.

    conv -> ReLU -> 4 residual blocks -> two stride-2 convs, landing at 1/4
    the input scale. The final conv has no activation, so zero weights give
    a constant map equal to its bias.
    """
    g.require_rank(3, "gradient feature input")
    x = relu(conv3x3(g, bank.conv("gfe.conv_in", g.shape[0], channels)))
    for i in range(4):
        x = residual_block(
            x,
            bank.conv(f"gfe.rb{i}.conv1", channels, channels),
            bank.conv(f"gfe.rb{i}.conv2", channels, channels),
        )
    x = relu(conv3x3(x, bank.conv("gfe.down1", channels, channels), stride=2))
    return conv3x3(x, bank.conv("gfe.down2", channels, channels), stride=2)
