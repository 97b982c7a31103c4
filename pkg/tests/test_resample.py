import numpy as np
import pytest

from patchxfer.errors import ParameterError, ShapeError
from patchxfer.gradients import gradient_density
from patchxfer.resample import ScaleSpec, bicubic_resize, bilinear_resize, down_up
from patchxfer.tensor import Tensor

from reference import scalar_bicubic


def test_scale_spec_validation():
    with pytest.raises(ParameterError):
        ScaleSpec(0)
    with pytest.raises(ParameterError):
        ScaleSpec(1, 0)


def test_scaled_len_rounding():
    assert ScaleSpec(1, 2).scaled_len(7) == 4  # round(3.5) up
    assert ScaleSpec(2).scaled_len(5) == 10
    assert ScaleSpec(1).scaled_len(9) == 9


def test_identity_factor_returns_input(rng):
    t = Tensor(rng.uniform(0, 1, size=(3, 6, 6)).astype(np.float32))
    out = bicubic_resize(t, ScaleSpec(3, 3))
    assert np.max(np.abs(out.a - t.a)) < 1e-6


@pytest.mark.parametrize("spec", [ScaleSpec(2), ScaleSpec(1, 2), ScaleSpec(3), ScaleSpec(3, 2)])
def test_constant_preserved(spec):
    # partition of unity: any constant image resizes to the same constant
    t = Tensor(np.full((2, 8, 8), 0.37, dtype=np.float32))
    out = bicubic_resize(t, spec)
    assert np.max(np.abs(out.a - np.float32(0.37))) < 1e-6


def test_ramp_upsample_matches_scalar_oracle():
    ramp = np.tile(np.arange(8, dtype=np.float32) / 8.0, (8, 1))
    t = Tensor(ramp[None, :, :])
    out = bicubic_resize(t, ScaleSpec(2))
    expected = scalar_bicubic(t.a, 16, 16)
    assert np.max(np.abs(out.a.astype(np.float64) - expected)) < 1e-5


def test_random_resize_matches_scalar_oracle(rng):
    from patchxfer.resample import resize_to

    t = Tensor(rng.uniform(0, 1, size=(2, 7, 9)).astype(np.float32))
    for out_h, out_w in [(14, 18), (4, 5), (11, 6)]:
        got = resize_to(t, out_h, out_w)
        expected = scalar_bicubic(t.a, out_h, out_w)
        assert np.max(np.abs(got.a.astype(np.float64) - expected)) < 1e-5


def test_zero_output_dimension_rejected():
    t = Tensor(np.ones((1, 4, 4), dtype=np.float32))
    with pytest.raises(ShapeError):
        bicubic_resize(t, ScaleSpec(1, 16))


class TestDownUp:
    def test_constant_is_fixed_point(self):
        t = Tensor(np.full((3, 8, 8), 0.6, dtype=np.float32))
        out = down_up(t, 4)
        assert np.max(np.abs(out.a - np.float32(0.6))) < 1e-6

    def test_shape_preserved_divisible(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(3, 160, 160)).astype(np.float32))
        assert down_up(t, 4).shape == (3, 160, 160)

    def test_shape_preserved_non_divisible(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(2, 10, 13)).astype(np.float32))
        assert down_up(t, 4).shape == (2, 10, 13)

    def test_factor_one_is_identity(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(1, 5, 5)).astype(np.float32))
        assert np.array_equal(down_up(t, 1).a, t.a)

    def test_checkerboard_loses_gradient_mass(self):
        # Nyquist checkerboard: down-up must strictly attenuate high frequency
        yy, xx = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
        board = ((yy + xx) % 2).astype(np.float32)[None, :, :]
        t = Tensor(board)
        before = float(gradient_density(t).a.sum())
        after = float(gradient_density(down_up(t, 4)).a.sum())
        assert after < before

    def test_smoothing_on_160(self, rng):
        yy, xx = np.meshgrid(np.arange(160), np.arange(160), indexing="ij")
        board = ((yy + xx) % 2).astype(np.float32)
        t = Tensor(np.stack([board] * 3))
        before = float(gradient_density(t).a.sum())
        after = float(gradient_density(down_up(t, 4)).a.sum())
        assert down_up(t, 4).shape == (3, 160, 160)
        assert after < before


def test_bilinear_constant_and_endpoints():
    t = Tensor(np.full((1, 3, 3), 0.25, dtype=np.float32))
    out = bilinear_resize(t, 9, 9)
    assert np.max(np.abs(out.a - np.float32(0.25))) < 1e-6
