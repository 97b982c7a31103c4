import numpy as np
import pytest

from patchxfer.image import ImageU8


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_image(pixels: np.ndarray) -> ImageU8:
    h, w, _ = pixels.shape
    return ImageU8(width=w, height=h, pixels=np.ascontiguousarray(pixels, dtype=np.uint8))


def random_image(rng: np.random.Generator, h: int, w: int) -> ImageU8:
    return make_image(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
