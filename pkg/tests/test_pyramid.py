import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csstereo import ColorImage, DimensionError, build_pyramid, gaussian_downsample
from csstereo.pyramid import _KERNEL, ImagePyramid, reflect_index


class TestReflectIndex:
    def test_frozen_cases(self):
        assert reflect_index(0, 5) == 0
        assert reflect_index(-1, 5) == 1
        assert reflect_index(-2, 5) == 2
        assert reflect_index(5, 5) == 3
        assert reflect_index(6, 5) == 2
        assert reflect_index(4, 5) == 4
        assert reflect_index(7, 1) == 0

    @given(st.integers(2, 12), st.integers(-40, 40))
    @settings(max_examples=200, deadline=None)
    def test_matches_numpy_reflect_padding(self, n, i):
        a = np.arange(n, dtype=float)
        pad = 40
        padded = np.pad(a, pad, mode="reflect")
        assert padded[i + pad] == a[reflect_index(i, n)]

    def test_always_in_range(self):
        for n in range(1, 8):
            for i in range(-30, 30):
                assert 0 <= reflect_index(i, n) < n


class TestGaussianDownsample:
    def test_corner_impulse_weight(self):
        # the corner sample of the blurred impulse proves mirrored-border
        # weighting: row and column taps 6/16 each, no center repetition
        img = np.zeros((4, 4, 3))
        img[0, 0] = 1.0
        out = gaussian_downsample(ColorImage(img))
        assert out.data[0, 0, 0] == (6 / 16) ** 2

    def test_output_dims_are_ceil_halves(self, rng):
        out = gaussian_downsample(ColorImage(rng.random((7, 9, 3))))
        assert (out.height, out.width) == (4, 5)

    def test_constant_preserved(self):
        img = ColorImage(np.full((6, 5, 3), 0.42))
        out = gaussian_downsample(img)
        assert np.allclose(out.data, 0.42, atol=1e-15)

    def test_kernel_taps(self):
        assert np.array_equal(_KERNEL, np.array([1, 4, 6, 4, 1]) / 16.0)
        assert _KERNEL.sum() == 1.0

    def test_matches_scalar_convolution_oracle(self, rng):
        a = rng.random((5, 6, 3))
        out = gaussian_downsample(ColorImage(a))
        h, w = 5, 6
        for yy in range(out.height):
            for xx in range(out.width):
                y, x = 2 * yy, 2 * xx
                acc = np.zeros(3)
                for ty in range(-2, 3):
                    for tx in range(-2, 3):
                        wgt = _KERNEL[ty + 2] * _KERNEL[tx + 2]
                        acc += wgt * a[reflect_index(y + ty, h), reflect_index(x + tx, w)]
                assert np.allclose(out.data[yy, xx], acc, atol=1e-12)


class TestBuildPyramid:
    def test_level_count_and_finest_identity(self, rng):
        img = ColorImage(rng.random((16, 16, 3)))
        pyr = build_pyramid(img, 3)
        assert len(pyr) == 4 and pyr.num_scales == 3
        assert pyr[0] is img

    def test_benchmark_dims_chain(self, rng):
        img = ColorImage(rng.random((375, 450, 3)))
        pyr = build_pyramid(img, 4)
        dims = [(lvl.width, lvl.height) for lvl in pyr.levels]
        assert dims == [(450, 375), (225, 188), (113, 94), (57, 47), (29, 24)]

    def test_too_small_rejected(self, rng):
        img = ColorImage(rng.random((8, 8, 3)))
        with pytest.raises(DimensionError):
            build_pyramid(img, 4)
        build_pyramid(img, 2)  # coarsest 2x2 is the floor

    def test_zero_scales(self, rng):
        img = ColorImage(rng.random((4, 4, 3)))
        pyr = build_pyramid(img, 0)
        assert len(pyr) == 1 and pyr[0] is img

    def test_negative_scales_rejected(self, rng):
        with pytest.raises(ValueError):
            build_pyramid(ColorImage(rng.random((4, 4, 3))), -1)

    def test_empty_pyramid_rejected(self):
        with pytest.raises(DimensionError):
            ImagePyramid(())
