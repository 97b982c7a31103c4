"""Training-objective terms, computed as pure functions of supplied data.

The adversarial terms take critic outputs as plain vectors: no critic
network or training loop lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .features import FeaturePyramid
from .gradients import gradient_density
from .tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the total loss, defaults (1, 1e-2, 1e-3, 1e-3)."""

    rec: float = 1.0
    perc: float = 1e-2
    grad: float = 1e-3
    adv: float = 1e-3

    def __post_init__(self):
        if min(self.rec, self.perc, self.grad, self.adv) < 0:
            raise ParameterError("loss weights must be non-negative")


@dataclass(frozen=True)
class CriticOutputs:
    """Critic scores on generated/real batches plus interpolate gradient norms."""

    generated: np.ndarray
    real: np.ndarray
    gradient_norms: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generated, dtype=np.float64)
        r = np.asarray(self.real, dtype=np.float64)
        n = np.asarray(self.gradient_norms, dtype=np.float64)
        if not (g.ndim == r.ndim == n.ndim == 1) or not (len(g) == len(r) == len(n)):
            raise ShapeError("critic outputs must be equal-length 1-d vectors")
        if len(g) == 0:
            raise ShapeError("critic outputs cannot be empty")
        if np.any(n < 0):
            raise ParameterError("gradient norms must be non-negative")
        object.__setattr__(self, "generated", g)
        object.__setattr__(self, "real", r)
        object.__setattr__(self, "gradient_norms", n)


def _mean_abs_diff(a: Tensor, b: Tensor, what: str) -> float:
    if a.shape != b.shape:
        raise ShapeError(f"{what} operands differ in shape: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a.a.astype(np.float64) - b.a.astype(np.float64))))


def l1_rec(sr: Tensor, hr: Tensor) -> float:
    """Reconstruction term: mean absolute difference."""
    return _mean_abs_diff(sr, hr, "l1_rec")


def perceptual_loss(feats_sr: FeaturePyramid, feats_hr: FeaturePyramid, level: int) -> float:
    """Mean absolute feature difference at one pyramid level (1..3)."""
    if level not in (1, 2, 3):
        raise ParameterError(f"pyramid level must be 1..3, got {level}")
    return _mean_abs_diff(
        feats_sr.level(level), feats_hr.level(level), "perceptual_loss"
    )


def grad_loss(sr: Tensor, hr: Tensor) -> float:
    """Mean absolute difference of the gradient-density maps."""
    if sr.shape != hr.shape:
        raise ShapeError(f"grad_loss operands differ in shape: {sr.shape} vs {hr.shape}")
    return _mean_abs_diff(gradient_density(sr), gradient_density(hr), "grad_loss")


def wgan_gp_losses(c: CriticOutputs, penalty_weight: float) -> tuple[float, float]:
    """(critic loss, generator loss) for the gradient-penalty objective.

    L_D = mean D(gen) - mean D(real) + penalty * mean((norm - 1)^2)
    L_G = -mean D(gen)
    """
    mean_gen = float(np.mean(c.generated))
    penalty = float(np.mean((c.gradient_norms - 1.0) ** 2))
    l_d = mean_gen - float(np.mean(c.real)) + penalty_weight * penalty
    return l_d, -mean_gen


def total_loss(
    rec: float,
    perc: float,
    grad: float,
    adv: float,
    weights: LossWeights = LossWeights(),
) -> float:
    return (
        weights.rec * rec
        + weights.perc * perc
        + weights.grad * grad
        + weights.adv * adv
    )
