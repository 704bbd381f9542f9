"""Inter-scale regularized fusion of per-scale aggregated cost volumes.

Treating the aggregated cost at each pyramid scale as a noisy observation
and penalizing squared differences between adjacent scales with strength
lambda yields, per fine-grid (pixel, level), the linear system A v = v~
with A tridiagonal: interior rows (-lam, 1+2*lam, -lam) and boundary rows
(1+lam, -lam) / (-lam, 1+lam). Only the first component of the solution
is needed for output, so the production path precomputes row 0 of A^-1
once and fuses the volumes as a fixed convex combination. The full solve
is kept as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CostVolume, DimensionError, PixelCoord
from .cost import levels_at_scale


@dataclass(frozen=True, eq=False)
class CostPyramid:
    """Aggregated cost volumes from finest (s=0) to coarsest (s=S).

    Dims must be consistent with a halving image pyramid: each level's
    W/H are the ceil-half of the previous, and its disparity count is
    levels_at_scale(L0, s).
    """

    volumes: tuple[CostVolume, ...]

    def __post_init__(self) -> None:
        vols = tuple(self.volumes)
        if not vols:
            raise DimensionError("cost pyramid needs at least one volume")
        L0 = vols[0].levels
        for s in range(1, len(vols)):
            prev, cur = vols[s - 1], vols[s]
            want = (-(-prev.width // 2), -(-prev.height // 2), levels_at_scale(L0, s))
            got = (cur.width, cur.height, cur.levels)
            if got != want:
                raise DimensionError(f"scale {s}: volume is {got}, expected {want}")
        object.__setattr__(self, "volumes", vols)

    @property
    def num_scales(self) -> int:
        return len(self.volumes) - 1

    def __len__(self) -> int:
        return len(self.volumes)

    def __getitem__(self, s: int) -> CostVolume:
        return self.volumes[s]


@dataclass(frozen=True, eq=False)
class InterScaleWeights:
    """Row 0 of A^-1: the convex weights each scale contributes to the
    finest-scale fused cost."""

    S: int
    lam: float
    w: np.ndarray

    def __post_init__(self) -> None:
        if self.S < 0:
            raise ValueError("S must be >= 0")
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if w.shape != (self.S + 1,):
            raise DimensionError(f"weights must have shape ({self.S + 1},), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


def build_tridiagonal(S: int, lam: float) -> np.ndarray:
    """The (S+1)x(S+1) coupling matrix: identity plus lam times the path
    Laplacian. Every row sums to 1, and the matrix is strictly diagonally
    dominant, hence always invertible."""
    if S < 0:
        raise ValueError("S must be >= 0")
    if not lam >= 0:
        raise ValueError("lambda must be >= 0")
    n = S + 1
    A = np.zeros((n, n))
    for s in range(n):
        touches = (1 if s > 0 else 0) + (1 if s < n - 1 else 0)
        A[s, s] = 1.0 + touches * lam
        if s > 0:
            A[s, s - 1] = -lam
        if s < n - 1:
            A[s, s + 1] = -lam
    return A


def row0_inverse_weights(S: int, lam: float) -> InterScaleWeights:
    """Solve A x = e0 by tridiagonal (Thomas) elimination; by symmetry x
    is row 0 of A^-1. lam = 0 short-circuits to an exact e0."""
    if S < 0:
        raise ValueError("S must be >= 0")
    if not lam >= 0:
        raise ValueError("lambda must be >= 0")
    n = S + 1
    if n == 1 or lam == 0.0:
        w = np.zeros(n)
        w[0] = 1.0
        return InterScaleWeights(S, lam, w)
    # forward sweep: cp holds the reduced super-diagonal, dp the reduced rhs
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = -lam / (1.0 + lam)
    dp[0] = 1.0 / (1.0 + lam)
    for i in range(1, n):
        diag = (1.0 + lam) if i == n - 1 else (1.0 + 2.0 * lam)
        m = diag - (-lam) * cp[i - 1]
        cp[i] = -lam / m
        dp[i] = (0.0 - (-lam) * dp[i - 1]) / m
    w = np.empty(n)
    w[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        w[i] = dp[i] - cp[i] * w[i + 1]
    # the exact weights sum to 1 (A's rows do); rescale away elimination
    # rounding so fusion preserves constants at any lambda
    w /= w.sum()
    return InterScaleWeights(S, lam, w)


def map_coord(i: PixelCoord, s: int, coarse_w: int, coarse_h: int) -> PixelCoord:
    """Fine pixel to its scale-s counterpart: floor-divide by 2^s, clamp
    into the coarse grid."""
    if i.x < 0 or i.y < 0:
        raise DimensionError(f"coordinate {i} must be nonnegative")
    if s < 0:
        raise ValueError("s must be >= 0")
    return PixelCoord(min(i.x >> s, coarse_w - 1), min(i.y >> s, coarse_h - 1))


def sample_coarse_cost(vol_s: CostVolume, i_s: PixelCoord, l: int, s: int) -> float:
    """Cost of fine disparity l read from a scale-s volume at coarse pixel
    i_s: linear interpolation between the bracketing coarse levels
    floor(l/2^s) and ceil(l/2^s), both clamped into range."""
    if s < 0:
        raise ValueError("s must be >= 0")
    lf = l / (1 << s)
    lo = math.floor(lf)
    t = lf - lo
    top = vol_s.levels - 1
    l0 = min(lo, top)
    l1 = min(lo + 1, top) if t > 0 else l0
    v0 = vol_s.data[i_s.y, i_s.x, l0]
    v1 = vol_s.data[i_s.y, i_s.x, l1]
    return float((1.0 - t) * v0 + t * v1)


def _sampled_on_fine_grid(pyr: CostPyramid, s: int) -> np.ndarray:
    """Scale-s volume resampled to the finest grid: nearest (floor) pixel
    mapping, linear disparity interpolation. s=0 is an exact view."""
    fine = pyr[0]
    if s == 0:
        return fine.data
    vol = pyr[s]
    ys = np.minimum(np.arange(fine.height) >> s, vol.height - 1)
    xs = np.minimum(np.arange(fine.width) >> s, vol.width - 1)
    coarse = vol.data[np.ix_(ys, xs)]
    lf = np.arange(fine.levels) / (1 << s)
    lo = np.floor(lf)
    t = lf - lo
    top = vol.levels - 1
    l0 = np.minimum(lo.astype(np.int64), top)
    l1 = np.minimum(np.where(t > 0, l0 + 1, l0), top)
    return (1.0 - t) * coarse[:, :, l0] + t * coarse[:, :, l1]


def fuse(pyr: CostPyramid, weights: InterScaleWeights) -> CostVolume:
    """Fused finest-scale volume: the row-0 convex combination of every
    scale's cost, each resampled to the finest grid."""
    if weights.S != pyr.num_scales:
        raise DimensionError(
            f"weights cover {weights.S} scales, pyramid has {pyr.num_scales}"
        )
    out = weights.w[0] * pyr[0].data
    for s in range(1, len(pyr)):
        out += weights.w[s] * _sampled_on_fine_grid(pyr, s)
    return CostVolume(out)


def solve_full_system(pyr: CostPyramid, lam: float) -> list[CostVolume]:
    """Oracle path: solve A v = v~ with the explicit inverse for every
    fine-grid (pixel, level), returning all S+1 fused components (each on
    the finest grid, like the stacked v~ they came from). fuse() must
    match component 0."""
    S = pyr.num_scales
    Ainv = np.linalg.inv(build_tridiagonal(S, lam))
    stack = np.stack([_sampled_on_fine_grid(pyr, s) for s in range(S + 1)])
    fused = np.einsum("st,thwl->shwl", Ainv, stack)
    # A^-1 of this M-matrix is elementwise nonnegative, but enforce the
    # cost-domain floor against rounding at exact zeros
    return [CostVolume(np.maximum(fused[s], 0.0)) for s in range(S + 1)]


def pyramid_cell_count(width: int, height: int, levels: int, S: int) -> int:
    """Total (pixel, level) cells across all S+1 scales."""
    total = 0
    w, h = width, height
    for s in range(S + 1):
        total += w * h * levels_at_scale(levels, s)
        w = -(-w // 2)
        h = -(-h // 2)
    return total


def assert_complexity_bound(width: int, height: int, levels: int, S: int) -> None:
    """The geometric-series work bound: cells across scales must not
    exceed 8/7 of the finest volume, with 5% slack for ceil rounding."""
    total = pyramid_cell_count(width, height, levels, S)
    bound = (8.0 / 7.0) * width * height * levels * 1.05
    if total > bound:
        raise AssertionError(
            f"pyramid holds {total} cells, exceeding the 8/7 bound {bound:.0f}"
        )
