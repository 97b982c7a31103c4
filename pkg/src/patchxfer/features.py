"""Three-level feature pyramids and the pluggable extractors that build them.

Every pyramid has channel widths (64, 128, 256) with the spatial size
halving at each level, so inputs must have dimensions divisible by 4.

Extractor plugins:
  builtin-random       fixed-seed random-projection conv stack
  builtin-handcrafted  pixels + luma + Sobel responses + local statistics,
                       tiled to the required widths
  file                 three TNSR dumps returned verbatim after validation
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError, ShapeError
from .gradients import SOBEL_X, SOBEL_Y, _correlate3
from .nn import conv3x3, relu, seeded_conv
from .resample import ScaleSpec, bicubic_resize
from .tensor import Tensor, load_tensor, to_luma_bt601, tensor_from_f64

LEVEL_CHANNELS = (64, 128, 256)


@dataclass(frozen=True)
class FeaturePyramid:
    """(level1, level2, level3) at relative scales 1, 1/2, 1/4."""

    level1: Tensor
    level2: Tensor
    level3: Tensor

    def __post_init__(self):
        for i, (t, want) in enumerate(zip(self.levels, LEVEL_CHANNELS), start=1):
            t.require_channels(want, f"pyramid level {i}")
        _, h, w = self.level1.shape
        if self.level2.shape[1:] != (h // 2, w // 2) or h % 2 or w % 2:
            raise ShapeError(
                f"level 2 must be half of level 1: {self.level1.shape} vs "
                f"{self.level2.shape}"
            )
        if self.level3.shape[1:] != (h // 4, w // 4) or (h // 2) % 2 or (w // 2) % 2:
            raise ShapeError(
                f"level 3 must be a quarter of level 1: {self.level1.shape} vs "
                f"{self.level3.shape}"
            )

    @property
    def levels(self) -> tuple[Tensor, Tensor, Tensor]:
        return (self.level1, self.level2, self.level3)

    def level(self, i: int) -> Tensor:
        return self.levels[i - 1]


def _require_extractable(img: Tensor) -> None:
    img.require_channels(3, "extractor input")
    _, h, w = img.shape
    if h % 4 or w % 4 or h < 8 or w < 8:
        raise ShapeError(
            f"extractor input dims must be >= 8 and divisible by 4, got {h}x{w}"
        )


class RandomConvExtractor:
    """Seeded random-projection conv stack: 3->64, then stride-2 64->128,
    then stride-2 128->256, ReLU between levels. Same seed, same pyramid."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._convs = (
            seeded_conv(seed, "extractor.level1", 3, 64),
            seeded_conv(seed, "extractor.level2", 64, 128),
            seeded_conv(seed, "extractor.level3", 128, 256),
        )

    def extract(self, img: Tensor) -> FeaturePyramid:
        _require_extractable(img)
        l1 = conv3x3(img, self._convs[0])
        l2 = conv3x3(relu(l1), self._convs[1], stride=2)
        l3 = conv3x3(relu(l2), self._convs[2], stride=2)
        return FeaturePyramid(level1=l1, level2=l2, level3=l3)


_BOX3 = np.full((3, 3), 1.0 / 9.0)


def _base_maps(img: Tensor) -> np.ndarray:
    """Eight handcrafted planes: R, G, B, Y, Sobel-x(Y), Sobel-y(Y), GD(Y),
    and a 3x3 local mean of Y."""
    y = to_luma_bt601(img).a[0].astype(np.float64)
    gx = _correlate3(y, SOBEL_X)
    gy = _correlate3(y, SOBEL_Y)
    planes = [
        img.a[0].astype(np.float64),
        img.a[1].astype(np.float64),
        img.a[2].astype(np.float64),
        y,
        gx,
        gy,
        np.sqrt(gx * gx + gy * gy),
        _correlate3(y, _BOX3),
    ]
    return np.stack(planes)


class HandcraftedExtractor:
    """Deterministic classical features, tiled to the pyramid widths."""

    def extract(self, img: Tensor) -> FeaturePyramid:
        _require_extractable(img)
        half = bicubic_resize(img, ScaleSpec(1, 2))
        quarter = bicubic_resize(half, ScaleSpec(1, 2))
        levels = []
        for source, width in zip((img, half, quarter), LEVEL_CHANNELS):
            base = _base_maps(source)
            levels.append(tensor_from_f64(np.tile(base, (width // base.shape[0], 1, 1))))
        return FeaturePyramid(level1=levels[0], level2=levels[1], level3=levels[2])


class FileExtractor:
    """Returns three TNSR dumps verbatim; validates them against the image."""

    def __init__(self, level_paths: tuple[str | Path, str | Path, str | Path]):
        if len(level_paths) != 3:
            raise ParameterError("file extractor needs exactly three level paths")
        self.level_paths = tuple(Path(p) for p in level_paths)

    def extract(self, img: Tensor) -> FeaturePyramid:
        _require_extractable(img)
        l1, l2, l3 = (load_tensor(p) for p in self.level_paths)
        pyr = FeaturePyramid(level1=l1, level2=l2, level3=l3)
        if pyr.level1.shape[1:] != img.shape[1:]:
            raise ShapeError(
                f"file pyramid level 1 is {pyr.level1.shape}, image is {img.shape}"
            )
        return pyr


BUILTIN_EXTRACTORS = ("builtin-random", "builtin-handcrafted")


def extract_features(img: Tensor, extractor: str, seed: int = 0) -> FeaturePyramid:
    """One-shot pyramid extraction from a plugin id string."""
    return make_extractor(extractor, seed=seed).extract(img)


def make_extractor(spec: str, seed: int = 0):
    """Build an extractor from its config string.

    "file:DIR" expects DIR/level1.tnsr .. level3.tnsr; role-specific file
    pyramids are resolved by the pipeline, which appends the role subdir.
    """
    if spec == "builtin-random":
        return RandomConvExtractor(seed=seed)
    if spec == "builtin-handcrafted":
        return HandcraftedExtractor()
    if spec.startswith("file:"):
        base = Path(spec[len("file:") :])
        return FileExtractor(
            (base / "level1.tnsr", base / "level2.tnsr", base / "level3.tnsr")
        )
    raise ParameterError(
        f"unknown extractor {spec!r}; expected one of {BUILTIN_EXTRACTORS} or 'file:DIR'"
    )
