"""Intra-scale cost aggregation: five interchangeable similarity kernels.

Every aggregator realizes the same weighted-least-squares answer,
out(i, l) = (1/Z_i) * sum_j K(i, j) * in(j, l), and they differ only in
the kernel K:

  BOX  uniform weights over a square window
  BF   joint spatial/color Gaussian over a square window
  GF   the guided filter's implicit (possibly negative) kernel
  NL   exp(-geodesic distance / sigma) on the image's minimum spanning tree
  ST   the same kernel on a segmentation-aware spanning tree

Normalization is uniform across kinds: an all-ones channel rides along
through the kernel's linear pass and the output is divided by it, so the
1/Z_i above holds exactly however the kernel treats borders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .core import ColorImage, CostVolume, DimensionError


@dataclass(frozen=True)
class BoxAggregator:
    radius: int = 3  # 7x7 window

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError("radius must be >= 1")


@dataclass(frozen=True)
class BilateralAggregator:
    radius: int = 17  # 35x35 window
    sigma_s: float = 17.5
    sigma_c: float = 0.1

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if not (self.sigma_s > 0 and self.sigma_c > 0):
            raise ValueError("sigmas must be > 0")


@dataclass(frozen=True)
class GuidedAggregator:
    radius: int = 9
    eps: float = 1e-4

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")


@dataclass(frozen=True)
class NonLocalAggregator:
    sigma: float = 0.1

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")


@dataclass(frozen=True)
class SegmentTreeAggregator:
    sigma: float = 0.1
    k: float = 1200.0 / 255.0  # segmentation threshold on [0,1] weights

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if not self.k > 0:
            raise ValueError("k must be > 0")


AggregatorKind = Union[
    BoxAggregator, BilateralAggregator, GuidedAggregator, NonLocalAggregator, SegmentTreeAggregator
]

_KIND_NAMES = {
    "box": BoxAggregator,
    "bf": BilateralAggregator,
    "gf": GuidedAggregator,
    "nl": NonLocalAggregator,
    "st": SegmentTreeAggregator,
}


def make_aggregator(name: str, **params) -> AggregatorKind:
    try:
        cls = _KIND_NAMES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown aggregator {name!r} (expected one of {sorted(_KIND_NAMES)})")
    return cls(**params)


def aggregator_name(kind: AggregatorKind) -> str:
    for name, cls in _KIND_NAMES.items():
        if isinstance(kind, cls):
            return name
    raise TypeError(f"not an aggregator kind: {kind!r}")


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """A rooted spanning tree over the W*H pixel grid.

    parent[v] is -1 exactly at the root; parent_weight[v] is the weight of
    the edge to the parent (0 at the root); order lists every node with
    children strictly before their parent (leaves to root).
    """

    width: int
    height: int
    parent: np.ndarray
    parent_weight: np.ndarray
    order: np.ndarray

    def __post_init__(self) -> None:
        n = self.width * self.height
        parent = np.ascontiguousarray(self.parent, dtype=np.int64)
        pw = np.ascontiguousarray(self.parent_weight, dtype=np.float64)
        order = np.ascontiguousarray(self.order, dtype=np.int64)
        if n < 1:
            raise DimensionError("tree needs at least one node")
        if parent.shape != (n,) or pw.shape != (n,) or order.shape != (n,):
            raise DimensionError("tree arrays must all have length W*H")
        roots = np.flatnonzero(parent < 0)
        if roots.size != 1:
            raise ValueError(f"tree must have exactly one root, found {roots.size}")
        if np.any(pw < 0) or np.any(pw > 1):
            raise ValueError("edge weights must lie in [0, 1]")
        if order.min() < 0 or order.max() >= n or np.unique(order).size != n:
            raise ValueError("order must be a permutation of the nodes")
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        nonroot = parent >= 0
        if np.any(rank[np.flatnonzero(nonroot)] >= rank[parent[nonroot]]):
            raise ValueError("order must put every node before its parent")
        for name, arr in (("parent", parent), ("parent_weight", pw), ("order", order)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_nodes(self) -> int:
        return self.width * self.height

    @property
    def root(self) -> int:
        return int(self.order[-1])

    def children(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.parent == v)

    def total_weight(self) -> float:
        return float(self.parent_weight.sum())


def _grid_edges(guide: ColorImage):
    """4-connected grid edges sorted by (weight, y, x, direction).

    Weight = max over channels of |guide(i) - guide(j)|. Direction 0 is
    the edge to the right neighbor, 1 to the one below. Node id = y*W + x.
    """
    d = guide.data
    h, w = guide.height, guide.width
    ids = np.arange(h * w, dtype=np.int64).reshape(h, w)

    hu = ids[:, :-1].ravel()
    hv = ids[:, 1:].ravel()
    hw = np.abs(d[:, :-1, :] - d[:, 1:, :]).max(axis=2).ravel()
    hy, hx = np.divmod(hu, w)

    vu = ids[:-1, :].ravel()
    vv = ids[1:, :].ravel()
    vw = np.abs(d[:-1, :, :] - d[1:, :, :]).max(axis=2).ravel()
    vy, vx = np.divmod(vu, w)

    eu = np.concatenate([hu, vu])
    ev = np.concatenate([hv, vv])
    ew = np.concatenate([hw, vw])
    ey = np.concatenate([hy, vy])
    ex = np.concatenate([hx, vx])
    edir = np.concatenate([np.zeros_like(hu), np.ones_like(vu)])

    idx = np.lexsort((edir, ex, ey, ew))
    return eu[idx], ev[idx], ew[idx]


def _root_selected(h: int, w: int, eu, ev, ew, keep) -> SpanningTree:
    n = h * w
    ku, kv, kw = eu[keep], ev[keep], ew[keep]
    if ku.size != n - 1:
        raise ValueError("selected edges do not span the grid")
    src = np.concatenate([ku, kv])
    dst = np.concatenate([kv, ku])
    wgt = np.concatenate([kw, kw])
    perm = np.argsort(src, kind="stable")
    adj_node = dst[perm]
    adj_weight = wgt[perm]
    counts = np.zeros(n + 1, dtype=np.int64)
    np.add.at(counts, src + 1, 1)
    adj_start = np.cumsum(counts)
    parent, pweight, order, seen = _kernels.bfs_root(n, adj_start, adj_node, adj_weight, 0)
    if seen != n:
        raise ValueError("selected edges do not span the grid")
    return SpanningTree(w, h, parent, pweight, order[::-1].copy())


def build_mst(guide: ColorImage) -> SpanningTree:
    """Minimum spanning tree of the 4-connected pixel grid, rooted at
    pixel (0, 0). Deterministic: the fixed edge sort breaks all ties."""
    h, w = guide.height, guide.width
    if h * w == 1:
        return SpanningTree(w, h, np.array([-1]), np.array([0.0]), np.array([0]))
    eu, ev, ew = _grid_edges(guide)
    keep = _kernels.kruskal_select(h * w, eu, ev)
    return _root_selected(h, w, eu, ev, ew, keep)


def build_segment_tree(guide: ColorImage, k: float) -> SpanningTree:
    """Segmentation-first spanning tree: components merge greedily while
    the edge weight stays under min(Int(A) + k/|A|, Int(B) + k/|B|), then
    the lightest remaining edges link the segments into a single tree."""
    if not k > 0:
        raise ValueError("k must be > 0")
    h, w = guide.height, guide.width
    if h * w == 1:
        return SpanningTree(w, h, np.array([-1]), np.array([0.0]), np.array([0]))
    eu, ev, ew = _grid_edges(guide)
    keep = _kernels.segment_tree_select(h * w, eu, ev, ew, float(k))
    return _root_selected(h, w, eu, ev, ew, keep)


def _with_ones(vol: CostVolume) -> np.ndarray:
    h, w, l = vol.data.shape
    out = np.empty((h, w, l + 1))
    out[:, :, :l] = vol.data
    out[:, :, l] = 1.0
    return out


def _box_window_sum(a: np.ndarray, r: int) -> np.ndarray:
    """Per-pixel sums over the clamped (2r+1)^2 window, via integral image."""
    h, w = a.shape[:2]
    ii = np.zeros((h + 1, w + 1) + a.shape[2:])
    ii[1:, 1:] = np.cumsum(np.cumsum(a, axis=0), axis=1)
    y = np.arange(h)
    x = np.arange(w)
    y0 = np.maximum(y - r, 0)
    y1 = np.minimum(y + r, h - 1) + 1
    x0 = np.maximum(x - r, 0)
    x1 = np.minimum(x + r, w - 1) + 1
    return ii[y1][:, x1] - ii[y0][:, x1] - ii[y1][:, x0] + ii[y0][:, x0]


def box_aggregate(vol: CostVolume, radius: int) -> CostVolume:
    """Mean cost over the clamped square window, per level."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    sums = _box_window_sum(_with_ones(vol), radius)
    # integral-image cancellation can leave means a few ulp below zero
    return CostVolume(np.maximum(sums[:, :, : vol.levels] / sums[:, :, vol.levels :], 0.0))


def bilateral_aggregate(
    vol: CostVolume, guide: ColorImage, sigma_s: float, sigma_c: float, radius: int
) -> CostVolume:
    """Joint bilateral filtering of the volume, weights from the guide only."""
    _check_guide(vol, guide)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if not (sigma_s > 0 and sigma_c > 0):
        raise ValueError("sigmas must be > 0")
    sums = _kernels.bilateral_sums(
        _with_ones(vol), guide.data, radius, float(sigma_s), float(sigma_c)
    )
    return CostVolume(sums[:, :, : vol.levels] / sums[:, :, vol.levels :])


def _guided_filter_channels(channels: np.ndarray, guide: np.ndarray, r: int, eps: float) -> np.ndarray:
    """Guided filter of each (H, W) channel with a shared color guide.

    Local linear model per clamped window: q = a^T I + b with
    a = (Sigma + eps*Id)^-1 cov(I, p); the per-pixel inverse is computed
    once and reused for every channel.
    """
    h, w, c = channels.shape
    counts = _box_window_sum(np.ones((h, w)), r)

    def bmean(a: np.ndarray) -> np.ndarray:
        s = _box_window_sum(a, r)
        return s / counts[..., None] if a.ndim == 3 else s / counts

    mu = bmean(guide)
    var = np.empty((h, w, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            v = bmean(guide[:, :, i] * guide[:, :, j]) - mu[:, :, i] * mu[:, :, j]
            var[:, :, i, j] = v
            var[:, :, j, i] = v
    var += eps * np.eye(3)
    inv = np.linalg.inv(var)

    out = np.empty_like(channels)
    for k in range(c):
        p = channels[:, :, k]
        mp = bmean(p)
        cov = np.empty((h, w, 3))
        for i in range(3):
            cov[:, :, i] = bmean(guide[:, :, i] * p) - mu[:, :, i] * mp
        a = np.einsum("hwij,hwj->hwi", inv, cov)
        b = mp - np.einsum("hwi,hwi->hw", a, mu)
        ma = bmean(a)
        mb = bmean(b)
        out[:, :, k] = np.einsum("hwi,hwi->hw", ma, guide) + mb
    return out


def _guided_normalized(vol: CostVolume, guide: ColorImage, radius: int, eps: float) -> np.ndarray:
    f = _guided_filter_channels(_with_ones(vol), guide.data, radius, eps)
    return f[:, :, : vol.levels] / f[:, :, vol.levels :]


def guided_aggregate(vol: CostVolume, guide: ColorImage, radius: int, eps: float) -> CostVolume:
    """Guided filtering of the volume. The implicit kernel takes negative
    weights near edges, so outputs may undershoot; costs are floored at 0
    to stay in the cost-volume domain."""
    _check_guide(vol, guide)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    return CostVolume(np.maximum(_guided_normalized(vol, guide, radius, eps), 0.0))


def tree_aggregate(vol: CostVolume, tree: SpanningTree, sigma: float) -> CostVolume:
    """Exact geodesic-kernel aggregation, K(i,j) = exp(-D(i,j)/sigma), via
    one leaf-to-root and one root-to-leaf sweep."""
    if (tree.width, tree.height) != (vol.width, vol.height):
        raise DimensionError(
            f"tree is {tree.width}x{tree.height}, volume is {vol.width}x{vol.height}"
        )
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    flat = _with_ones(vol).reshape(tree.num_nodes, vol.levels + 1)
    similarity = np.exp(-tree.parent_weight / sigma)
    filtered = _kernels.tree_filter(flat, tree.parent, similarity, tree.order)
    filtered = filtered.reshape(vol.height, vol.width, vol.levels + 1)
    return CostVolume(filtered[:, :, : vol.levels] / filtered[:, :, vol.levels :])


def _check_guide(vol: CostVolume, guide: ColorImage) -> None:
    if (vol.width, vol.height) != (guide.width, guide.height):
        raise DimensionError(
            f"volume is {vol.width}x{vol.height}, guide is {guide.width}x{guide.height}"
        )


def aggregate(vol: CostVolume, guide: ColorImage, kind: AggregatorKind) -> CostVolume:
    """Aggregate a cost volume with the selected kernel, guided by the
    image the volume was computed from."""
    _check_guide(vol, guide)
    if isinstance(kind, BoxAggregator):
        return box_aggregate(vol, kind.radius)
    if isinstance(kind, BilateralAggregator):
        return bilateral_aggregate(vol, guide, kind.sigma_s, kind.sigma_c, kind.radius)
    if isinstance(kind, GuidedAggregator):
        return guided_aggregate(vol, guide, kind.radius, kind.eps)
    if isinstance(kind, NonLocalAggregator):
        return tree_aggregate(vol, build_mst(guide), kind.sigma)
    if isinstance(kind, SegmentTreeAggregator):
        return tree_aggregate(vol, build_segment_tree(guide, kind.k), kind.sigma)
    raise TypeError(f"not an aggregator kind: {kind!r}")
