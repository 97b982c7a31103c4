import numpy as np
import pytest

from patchxfer.errors import ParameterError, ShapeError
from patchxfer.features import (
    FeaturePyramid,
    FileExtractor,
    HandcraftedExtractor,
    RandomConvExtractor,
    make_extractor,
)
from patchxfer.tensor import Tensor, save_tensor


def random_input(rng, h=32, w=32):
    return Tensor(rng.uniform(0, 1, size=(3, h, w)).astype(np.float32))


@pytest.mark.parametrize("extractor", [RandomConvExtractor(seed=1), HandcraftedExtractor()])
def test_builtin_shapes(rng, extractor):
    pyr = extractor.extract(random_input(rng))
    assert pyr.level1.shape == (64, 32, 32)
    assert pyr.level2.shape == (128, 16, 16)
    assert pyr.level3.shape == (256, 8, 8)


def test_same_seed_same_pyramid(rng):
    img = random_input(rng)
    a = RandomConvExtractor(seed=9).extract(img)
    b = RandomConvExtractor(seed=9).extract(img)
    for x, y in zip(a.levels, b.levels):
        assert x.a.tobytes() == y.a.tobytes()


def test_different_seed_differs(rng):
    img = random_input(rng)
    a = RandomConvExtractor(seed=1).extract(img)
    b = RandomConvExtractor(seed=2).extract(img)
    assert not np.array_equal(a.level1.a, b.level1.a)


def test_handcrafted_deterministic(rng):
    img = random_input(rng)
    a = HandcraftedExtractor().extract(img)
    b = HandcraftedExtractor().extract(img)
    for x, y in zip(a.levels, b.levels):
        assert x.a.tobytes() == y.a.tobytes()


def test_input_validation(rng):
    with pytest.raises(ShapeError):
        RandomConvExtractor().extract(
            Tensor(rng.uniform(0, 1, size=(3, 30, 32)).astype(np.float32))
        )
    with pytest.raises(ShapeError):
        RandomConvExtractor().extract(
            Tensor(rng.uniform(0, 1, size=(1, 32, 32)).astype(np.float32))
        )


class TestFileExtractor:
    def _dump(self, tmp_path, rng, h=16, w=16):
        paths = []
        for i, (c, div) in enumerate(zip((64, 128, 256), (1, 2, 4)), start=1):
            t = Tensor(rng.uniform(0, 1, size=(c, h // div, w // div)).astype(np.float32))
            path = tmp_path / f"level{i}.tnsr"
            save_tensor(t, path)
            paths.append(path)
        return paths

    def test_passthrough(self, tmp_path, rng):
        paths = self._dump(tmp_path, rng)
        img = random_input(rng, 16, 16)
        pyr = FileExtractor(tuple(paths)).extract(img)
        from patchxfer.tensor import load_tensor

        for level, path in zip(pyr.levels, paths):
            assert np.array_equal(level.a, load_tensor(path).a)

    def test_wrong_dims_rejected(self, tmp_path, rng):
        paths = self._dump(tmp_path, rng, 16, 16)
        img = random_input(rng, 32, 32)
        with pytest.raises(ShapeError):
            FileExtractor(tuple(paths)).extract(img)

    def test_wrong_channels_rejected(self, tmp_path, rng):
        paths = self._dump(tmp_path, rng)
        bad = Tensor(rng.uniform(0, 1, size=(32, 16, 16)).astype(np.float32))
        save_tensor(bad, paths[0])
        with pytest.raises(ShapeError):
            FileExtractor(tuple(paths)).extract(random_input(rng, 16, 16))


def test_pyramid_scale_validation(rng):
    l1 = Tensor(rng.uniform(0, 1, size=(64, 16, 16)).astype(np.float32))
    l2 = Tensor(rng.uniform(0, 1, size=(128, 8, 8)).astype(np.float32))
    bad_l3 = Tensor(rng.uniform(0, 1, size=(256, 5, 4)).astype(np.float32))
    with pytest.raises(ShapeError):
        FeaturePyramid(level1=l1, level2=l2, level3=bad_l3)


def test_make_extractor_dispatch(tmp_path):
    assert isinstance(make_extractor("builtin-random", seed=0), RandomConvExtractor)
    assert isinstance(make_extractor("builtin-handcrafted"), HandcraftedExtractor)
    assert isinstance(make_extractor(f"file:{tmp_path}"), FileExtractor)
    with pytest.raises(ParameterError):
        make_extractor("vgg19")
