"""Gaussian image pyramids built by binomial smoothing and 2x decimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ColorImage, DimensionError, _frozen

# Binomial tap approximating a Gaussian; separable, sums to 1.
_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
_RADIUS = 2


def reflect_index(i: int, n: int) -> int:
    """Mirror an out-of-range index back into [0, n) without repeating the
    border sample (..., 2, 1, 0, 1, 2, ..., n-2, n-1, n-2, ...)."""
    if n == 1:
        return 0
    period = 2 * n - 2
    m = i % period
    return period - m if m >= n else m


def _blur_axis(a: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0)] * a.ndim
    pad[axis] = (_RADIUS, _RADIUS)
    ap = np.pad(a, pad, mode="reflect")
    out = np.zeros_like(a)
    for t, w in enumerate(_KERNEL):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(t, t + a.shape[axis])
        out += w * ap[tuple(sl)]
    return out


def gaussian_downsample(img: ColorImage) -> ColorImage:
    """Blur with the separable binomial kernel, then keep every other row
    and column starting at (0, 0). Output dims are ceil(H/2) x ceil(W/2)."""
    smoothed = _blur_axis(_blur_axis(img.data, axis=0), axis=1)
    return ColorImage(np.clip(smoothed[::2, ::2], 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class ImagePyramid:
    """Levels from finest (index 0, the input) to coarsest (index S)."""

    levels: tuple[ColorImage, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise DimensionError("pyramid needs at least one level")
        object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def num_scales(self) -> int:
        return len(self.levels) - 1

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, s: int) -> ColorImage:
        return self.levels[s]


def build_pyramid(img: ColorImage, num_scales: int) -> ImagePyramid:
    """Build num_scales + 1 levels by repeated gaussian_downsample.

    Rejects inputs whose coarsest level would shrink below 2x2.
    """
    if num_scales < 0:
        raise ValueError("num_scales must be >= 0")
    h, w = img.height, img.width
    for _ in range(num_scales):
        h = -(-h // 2)
        w = -(-w // 2)
    if h < 2 or w < 2:
        raise DimensionError(
            f"image {img.width}x{img.height} too small for {num_scales} scales "
            f"(coarsest level would be {w}x{h}, need at least 2x2)"
        )
    levels = [img]
    for _ in range(num_scales):
        levels.append(gaussian_downsample(levels[-1]))
    return ImagePyramid(tuple(levels))
