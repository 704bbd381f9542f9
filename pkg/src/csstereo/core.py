"""Shared value types: images, cost volumes, disparity maps.

All types are immutable after construction (their arrays are marked
read-only) and therefore safe to share across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class DimensionError(ValueError):
    """Raised when an image, volume, or map has unusable dimensions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class PixelCoord(NamedTuple):
    """Column/row index of a single pixel."""

    x: int
    y: int


@dataclass(frozen=True, eq=False)
class ColorImage:
    """RGB image, values normalized to [0, 1], stored as (H, W, 3) float64."""

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise DimensionError(f"color image data must be (H, W, 3), got {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError("image must be at least 1x1")
        if not np.all(np.isfinite(a)):
            raise ValueError("image values must be finite")
        if float(a.min(initial=0.0)) < 0.0 or float(a.max(initial=0.0)) > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel luminance image in [0, 1], stored as (H, W) float64."""

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError(f"gray image data must be (H, W), got {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError("image must be at least 1x1")
        if not np.all(np.isfinite(a)):
            raise ValueError("image values must be finite")
        if float(a.min(initial=0.0)) < 0.0 or float(a.max(initial=0.0)) > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class CostVolume:
    """Matching costs for every (pixel, disparity) pair.

    Stored as (H, W, L) float64 with the disparity axis fastest-varying,
    so the L costs of one pixel are contiguous for the WTA scan and for
    per-pixel fusion. Costs are finite and non-negative.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 3:
            raise DimensionError(f"cost volume data must be (H, W, L), got {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1 or a.shape[2] < 1:
            raise DimensionError("cost volume must have positive dimensions")
        if not np.all(np.isfinite(a)):
            raise ValueError("costs must be finite")
        if float(a.min()) < 0.0:
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def levels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Per-pixel disparity field.

    WTA output carries integer labels (int32); ground truth read from disk
    may carry fractional disparities (float64) after scale division.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.data)
        if a.ndim != 2:
            raise DimensionError(f"disparity data must be (H, W), got {a.shape}")
        a = a.astype(np.int32) if np.issubdtype(a.dtype, np.integer) else a.astype(np.float64)
        if not np.all(np.isfinite(a)):
            raise ValueError("disparities must be finite")
        if float(a.min()) < 0:
            raise ValueError("disparities must be non-negative")
        object.__setattr__(self, "data", _frozen(a))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def luminance(img: ColorImage) -> GrayImage:
    """Convert to luminance: 0.299*R + 0.587*G + 0.114*B per pixel."""
    d = img.data
    return GrayImage(0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2])


def x_gradient(img: GrayImage) -> np.ndarray:
    """Horizontal gradient of a gray image.

    Central difference (g(x+1) - g(x-1))/2 in the interior, one-sided
    difference at the first and last column. Returns a signed (H, W)
    float64 field, not a GrayImage (values may be negative).

    Raises:
        DimensionError: if the image is a single column.
    """
    g = img.data
    if g.shape[1] < 2:
        raise DimensionError("x_gradient needs width >= 2")
    out = np.empty_like(g)
    out[:, 1:-1] = (g[:, 2:] - g[:, :-2]) / 2.0
    out[:, 0] = g[:, 1] - g[:, 0]
    out[:, -1] = g[:, -1] - g[:, -2]
    return out
