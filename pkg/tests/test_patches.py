import numpy as np
import pytest

from patchxfer.errors import GeometryError, ShapeError
from patchxfer.patches import (
    PatchGeometry,
    PatchSet,
    coverage_counts,
    fold,
    patch_count,
    retarget,
    unfold,
)
from patchxfer.tensor import Tensor

from reference import naive_coverage, naive_patches_along, naive_unfold


class TestGeometry:
    def test_validation(self):
        with pytest.raises(GeometryError):
            PatchGeometry(0, 1, 0)
        with pytest.raises(GeometryError):
            PatchGeometry(3, 0, 0)
        with pytest.raises(GeometryError):
            PatchGeometry(3, 1, 3)  # pad must stay below window

    def test_window_larger_than_padded_input(self):
        with pytest.raises(GeometryError):
            patch_count(4, 4, PatchGeometry(6, 1, 0))

    def test_scaled(self):
        assert PatchGeometry(6, 2, 2).scaled(2) == PatchGeometry(12, 4, 4)


class TestPatchCount:
    def test_four_by_four(self):
        assert patch_count(4, 4, PatchGeometry(3, 1, 1)) == (4, 4, 16)

    def test_forty_square_three_window(self):
        # the deepest-level feature grid of the reference configuration
        assert patch_count(40, 40, PatchGeometry(3, 1, 1)) == (40, 40, 1600)

    def test_forty_square_six_window(self):
        assert patch_count(40, 40, PatchGeometry(6, 2, 2)) == (20, 20, 400)

    def test_160_square(self):
        assert patch_count(160, 160, PatchGeometry(3, 1, 1)) == (160, 160, 25600)

    def test_non_overlapping_tiling(self):
        # k == s, p == 0, divisible dims: exact tile count
        assert patch_count(12, 8, PatchGeometry(4, 4, 0)) == (3, 2, 6)

    def test_matches_formula_on_random_combos(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 7))
            s = int(rng.integers(1, 4))
            p = int(rng.integers(0, min(k, 3)))
            h = int(rng.integers(k, 20))
            w = int(rng.integers(k, 20))
            n_h, n_w, n = patch_count(h, w, PatchGeometry(k, s, p))
            assert n_h == naive_patches_along(h, k, s, p)
            assert n_w == naive_patches_along(w, k, s, p)
            assert n == n_h * n_w


class TestUnfold:
    def test_counts_on_4x4(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(1, 4, 4)).astype(np.float32))
        ps = unfold(t, PatchGeometry(3, 1, 1))
        assert ps.count == 16

    def test_rows_are_exact_copies(self, rng):
        # every row equals the scalar-loop copy oracle, bit for bit
        for k in range(1, 5):
            for s in range(1, 4):
                for p in range(0, min(k, 3)):
                    t = Tensor(rng.uniform(-1, 1, size=(2, 7, 9)).astype(np.float32))
                    ps = unfold(t, PatchGeometry(k, s, p))
                    expected = naive_unfold(t.a, k, s, p)
                    assert ps.patches.a.tobytes() == expected.tobytes()

    def test_row_count_matches_patch_count(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 7))
            s = int(rng.integers(1, 4))
            p = int(rng.integers(0, min(k, 3)))
            h = int(rng.integers(max(k - 2 * p, 1), 16))
            w = int(rng.integers(max(k - 2 * p, 1), 16))
            t = Tensor(rng.uniform(0, 1, size=(1, h, w)).astype(np.float32))
            ps = unfold(t, PatchGeometry(k, s, p))
            assert ps.count == patch_count(h, w, PatchGeometry(k, s, p))[2]

    def test_geometry_error_when_window_exceeds_input(self):
        t = Tensor(np.ones((1, 3, 3), dtype=np.float32))
        with pytest.raises(GeometryError):
            unfold(t, PatchGeometry(6, 1, 1))


class TestFold:
    def test_fold_unfold_identity(self, rng):
        for k, s, p in [(3, 1, 1), (6, 2, 2), (4, 2, 1), (2, 1, 0), (5, 3, 2)]:
            t = Tensor(rng.uniform(-2, 2, size=(3, 12, 10)).astype(np.float32))
            back = fold(unfold(t, PatchGeometry(k, s, p)))
            assert np.max(np.abs(back.a - t.a)) < 1e-6

    def test_single_patch_geometry_returns_patch(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(2, 5, 5)).astype(np.float32))
        ps = unfold(t, PatchGeometry(5, 1, 0))
        assert ps.count == 1
        assert np.max(np.abs(fold(ps).a - t.a)) < 1e-6

    def test_coverage_matches_bruteforce(self):
        got = coverage_counts(5, 5, PatchGeometry(3, 2, 1))
        expected = naive_coverage(5, 5, 3, 2, 1)
        assert np.array_equal(got, expected)

    def test_coverage_random(self, rng):
        for _ in range(50):
            k = int(rng.integers(1, 6))
            s = int(rng.integers(1, 4))
            p = int(rng.integers(0, min(k, 3)))
            h = int(rng.integers(max(k - 2 * p, 1), 12))
            w = int(rng.integers(max(k - 2 * p, 1), 12))
            assert np.array_equal(
                coverage_counts(h, w, PatchGeometry(k, s, p)),
                naive_coverage(h, w, k, s, p),
            )

    def test_uncovered_pixels_are_zero(self):
        # stride > window leaves gaps; they must come out 0, not NaN
        t = Tensor(np.ones((1, 5, 5), dtype=np.float32))
        g = PatchGeometry(1, 2, 0)
        out = fold(unfold(t, g))
        cov = coverage_counts(5, 5, g)
        assert np.all(out.a[0][cov == 0] == 0.0)
        assert np.all(out.a[0][cov > 0] == 1.0)

    def test_inconsistent_rows_rejected(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(1, 6, 6)).astype(np.float32))
        ps = unfold(t, PatchGeometry(3, 1, 1))
        with pytest.raises(ShapeError):
            PatchSet(
                patches=Tensor(ps.patches.a[:-1]),
                geometry=ps.geometry,
                channels=1,
                height=6,
                width=6,
            )


class TestRetarget:
    def test_valid_retarget(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(1, 8, 8)).astype(np.float32))
        ps = unfold(t, PatchGeometry(3, 1, 1))
        again = retarget(ps, channels=1, height=8, width=8)
        assert again.count == ps.count

    def test_retarget_rejects_inconsistent_grid(self, rng):
        t = Tensor(rng.uniform(0, 1, size=(1, 8, 8)).astype(np.float32))
        ps = unfold(t, PatchGeometry(3, 1, 1))
        with pytest.raises(ShapeError):
            retarget(ps, channels=1, height=20, width=20)
