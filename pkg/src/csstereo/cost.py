"""Matching-cost computation: per-pixel costs and full cost volumes.

Two cost functions are provided. `grad` blends truncated absolute color
difference with truncated absolute difference of horizontal luminance
gradients. `census` compares local rank-order signatures by Hamming
distance. Both define an out-of-frame cost for pixels whose match
candidate x - l falls left of the image, so every (pixel, level) cell is
filled.

The scalar ops (grad_cost, census_cost) are the definitional form; the
vectorized volume builders reproduce them bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import ColorImage, CostVolume, DimensionError, GrayImage, PixelCoord, luminance, x_gradient
from .pyramid import reflect_index


@dataclass(frozen=True)
class GradCostParams:
    alpha: float = 0.11   # blend weight between color and gradient terms
    tau1: float = 0.027   # color truncation, on [0,1] intensities
    tau2: float = 0.008   # gradient truncation

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not (self.tau1 > 0 and self.tau2 > 0):
            raise ValueError("tau1 and tau2 must be > 0")

    @property
    def out_of_frame_cost(self) -> float:
        return (1.0 - self.alpha) * self.tau1 + self.alpha * self.tau2


@dataclass(frozen=True)
class CensusParams:
    win_w: int = 9
    win_h: int = 7

    def __post_init__(self) -> None:
        for v in (self.win_w, self.win_h):
            if v < 3 or v % 2 == 0:
                raise ValueError("census window dims must be odd and >= 3")

    @property
    def signature_length(self) -> int:
        return self.win_w * self.win_h - 1


def _check_coord(img_w: int, img_h: int, i: PixelCoord) -> None:
    if not (0 <= i.x < img_w and 0 <= i.y < img_h):
        raise DimensionError(f"coordinate {i} outside {img_w}x{img_h} image")


def grad_cost(I: ColorImage, Ip: ColorImage, i: PixelCoord, l: int, p: GradCostParams) -> float:
    """Blended truncated color + gradient cost for matching pixel i at level l.

    cost = (1-alpha) * min(mean_channel |I(i) - Ip(i_l)|, tau1)
         + alpha     * min(|dxI(i) - dxIp(i_l)|, tau2)
    with i_l = (x - l, y). Out-of-frame candidates cost the truncation
    ceiling, the maximum any in-frame match can reach.
    """
    if (I.width, I.height) != (Ip.width, Ip.height):
        raise DimensionError("image pair dims differ")
    _check_coord(I.width, I.height, i)
    xs = i.x - l
    if xs < 0:
        return p.out_of_frame_cost
    d = I.data[i.y, i.x] - Ip.data[i.y, xs]
    color = min((abs(d[0]) + abs(d[1]) + abs(d[2])) / 3.0, p.tau1)
    gl = x_gradient(luminance(I))
    gr = x_gradient(luminance(Ip))
    grad = min(abs(gl[i.y, i.x] - gr[i.y, xs]), p.tau2)
    return float((1.0 - p.alpha) * color + p.alpha * grad)


def census_signature(g: GrayImage, i: PixelCoord, p: CensusParams) -> int:
    """Rank-order signature: one bit per non-center window position in
    row-major order (first position = bit 0), set iff that neighbor is
    strictly darker than the center. Overhanging positions read the
    mirrored in-frame pixel."""
    _check_coord(g.width, g.height, i)
    rx, ry = p.win_w // 2, p.win_h // 2
    center = g.data[i.y, i.x]
    sig = 0
    bit = 0
    for dy in range(-ry, ry + 1):
        for dx in range(-rx, rx + 1):
            if dx == 0 and dy == 0:
                continue
            yy = reflect_index(i.y + dy, g.height)
            xx = reflect_index(i.x + dx, g.width)
            if g.data[yy, xx] < center:
                sig |= 1 << bit
            bit += 1
    return sig


def census_cost(gL: GrayImage, gR: GrayImage, i: PixelCoord, l: int, p: CensusParams) -> float:
    """Normalized Hamming distance between left/right signatures in [0,1];
    out-of-frame candidates cost 1.0."""
    if (gL.width, gL.height) != (gR.width, gR.height):
        raise DimensionError("image pair dims differ")
    _check_coord(gL.width, gL.height, i)
    xs = i.x - l
    if xs < 0:
        return 1.0
    a = census_signature(gL, i, p)
    b = census_signature(gR, PixelCoord(xs, i.y), p)
    return (a ^ b).bit_count() / p.signature_length


def _census_signature_words(g: GrayImage, p: CensusParams) -> np.ndarray:
    """Signatures for every pixel, packed into (H, W, ceil(len/64)) uint64.

    Bit numbering matches census_signature: window position k (row-major,
    center skipped) lands in word k // 64 at bit k % 64.
    """
    rx, ry = p.win_w // 2, p.win_h // 2
    h, w = g.height, g.width
    padded = np.pad(g.data, ((ry, ry), (rx, rx)), mode="reflect")
    nwords = (p.signature_length + 63) // 64
    words = np.zeros((h, w, nwords), dtype=np.uint64)
    bit = 0
    for dy in range(-ry, ry + 1):
        for dx in range(-rx, rx + 1):
            if dx == 0 and dy == 0:
                continue
            neigh = padded[ry + dy : ry + dy + h, rx + dx : rx + dx + w]
            below = (neigh < g.data).astype(np.uint64)
            words[:, :, bit // 64] |= below << np.uint64(bit % 64)
            bit += 1
    return words


CostParams = Union[GradCostParams, CensusParams]


def build_cost_volume(
    I: ColorImage,
    Ip: ColorImage,
    L: int,
    method: str = "grad",
    params: CostParams | None = None,
) -> CostVolume:
    """Fill C(i, l) for every pixel i and level l in [0, L) with the selected
    per-pixel cost. Vectorized, but exactly equal to looping the scalar op."""
    if (I.width, I.height) != (Ip.width, Ip.height):
        raise DimensionError("image pair dims differ")
    if L < 1:
        raise ValueError("L must be >= 1")
    h, w = I.height, I.width

    if method == "grad":
        p = params if params is not None else GradCostParams()
        if not isinstance(p, GradCostParams):
            raise TypeError("method 'grad' needs GradCostParams")
        gl = x_gradient(luminance(I))
        gr = x_gradient(luminance(Ip))
        out = np.full((h, w, L), p.out_of_frame_cost)
        for l in range(min(L, w)):
            d = np.abs(I.data[:, l:, :] - Ip.data[:, : w - l, :])
            color = np.minimum((d[:, :, 0] + d[:, :, 1] + d[:, :, 2]) / 3.0, p.tau1)
            grad = np.minimum(np.abs(gl[:, l:] - gr[:, : w - l]), p.tau2)
            out[:, l:, l] = (1.0 - p.alpha) * color + p.alpha * grad
        return CostVolume(out)

    if method == "census":
        p = params if params is not None else CensusParams()
        if not isinstance(p, CensusParams):
            raise TypeError("method 'census' needs CensusParams")
        sl = _census_signature_words(luminance(I), p)
        sr = _census_signature_words(luminance(Ip), p)
        out = np.ones((h, w, L))
        n = p.signature_length
        for l in range(min(L, w)):
            ham = np.bitwise_count(sl[:, l:, :] ^ sr[:, : w - l, :]).sum(axis=2)
            out[:, l:, l] = ham.astype(np.float64) / n
        return CostVolume(out)

    raise ValueError(f"unknown cost method {method!r} (expected 'grad' or 'census')")


def levels_at_scale(L: int, s: int) -> int:
    """Disparity range at pyramid scale s: max(1, ceil(L / 2^s))."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if s < 0:
        raise ValueError("s must be >= 0")
    return max(1, -(-L // (1 << s)))
