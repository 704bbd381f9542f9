"""Disparity selection and quantitative evaluation.

Scoring follows the classic stereo-benchmark protocol: percent of
evaluated pixels whose absolute disparity error exceeds a threshold, and
the mean absolute error, both restricted to a validity mask (typically
non-occluded pixels with known ground truth).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import CostVolume, DimensionError, DisparityMap
from .imageio import EvalMask


def wta(vol: CostVolume) -> DisparityMap:
    """Winner-take-all: per pixel, the lowest disparity attaining the
    minimum cost (argmin's first-hit rule is the tie-break)."""
    return DisparityMap(np.argmin(vol.data, axis=2).astype(np.int32))


def _masked_abs_error(d: DisparityMap, gt: DisparityMap, mask: EvalMask) -> np.ndarray:
    if d.data.shape != gt.data.shape or d.data.shape != mask.data.shape:
        raise DimensionError(
            f"shape mismatch: disparity {d.data.shape}, gt {gt.data.shape}, "
            f"mask {mask.data.shape}"
        )
    if mask.count == 0:
        raise ValueError("evaluation mask is empty")
    return np.abs(d.data.astype(np.float64) - gt.data.astype(np.float64))[mask.data]


def error_rate(d: DisparityMap, gt: DisparityMap, mask: EvalMask, t: float) -> float:
    """Percent of masked pixels with |d - gt| > t."""
    if not t >= 0:
        raise ValueError("threshold must be >= 0")
    err = _masked_abs_error(d, gt, mask)
    return 100.0 * float(np.count_nonzero(err > t)) / err.size


def avg_abs_error(d: DisparityMap, gt: DisparityMap, mask: EvalMask) -> float:
    """Mean absolute disparity error over the mask, in pixels."""
    return float(_masked_abs_error(d, gt, mask).mean())


@dataclass(frozen=True)
class EvalReport:
    name: str
    method: str
    cross_scale: bool
    error_rate: float
    avg_err: float
    threshold: float
    evaluated_pixels: int
    runtime_ms: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.error_rate <= 100.0:
            raise ValueError("error_rate must be a percentage in [0, 100]")
        if self.avg_err < 0 or self.evaluated_pixels < 0 or self.runtime_ms < 0:
            raise ValueError("avg_err, evaluated_pixels and runtime_ms must be >= 0")

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "method": self.method,
                "cross_scale": self.cross_scale,
                "error_rate": self.error_rate,
                "avg_err": self.avg_err,
                "threshold": self.threshold,
                "evaluated_pixels": self.evaluated_pixels,
                "runtime_ms": self.runtime_ms,
            }
        )
