"""Numba-compiled inner loops for the aggregators.

Everything here works on plain ndarrays; the wrapping and validation live
in aggregators.py. All functions are deterministic: loop order is fixed
and no reduction order depends on thread scheduling (the only prange is
over independent output rows).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def bilateral_sums(vol, guide, radius, sigma_s, sigma_c):
    """Unnormalized bilateral sums over a clamped square window.

    vol is (H, W, C), guide (H, W, 3). Weight of neighbor j for center i:
    exp(-|pos_i-pos_j|^2 / 2*sigma_s^2) * exp(-|guide_i-guide_j|^2 / 2*sigma_c^2).
    """
    h, w, c = vol.shape
    out = np.zeros((h, w, c))
    inv_s = 1.0 / (2.0 * sigma_s * sigma_s)
    inv_c = 1.0 / (2.0 * sigma_c * sigma_c)
    for y in prange(h):
        for x in range(w):
            y0 = max(0, y - radius)
            y1 = min(h - 1, y + radius)
            x0 = max(0, x - radius)
            x1 = min(w - 1, x + radius)
            for yy in range(y0, y1 + 1):
                for xx in range(x0, x1 + 1):
                    dy = float(yy - y)
                    dx = float(xx - x)
                    d0 = guide[y, x, 0] - guide[yy, xx, 0]
                    d1 = guide[y, x, 1] - guide[yy, xx, 1]
                    d2 = guide[y, x, 2] - guide[yy, xx, 2]
                    wgt = np.exp(-(dx * dx + dy * dy) * inv_s) * np.exp(
                        -(d0 * d0 + d1 * d1 + d2 * d2) * inv_c
                    )
                    for k in range(c):
                        out[y, x, k] += wgt * vol[yy, xx, k]
    return out


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    # path compression
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def kruskal_select(n_nodes, eu, ev):
    """Mark the edges Kruskal keeps. Edges must arrive pre-sorted; ties are
    therefore already broken by the caller's ordering."""
    parent = np.arange(n_nodes)
    keep = np.zeros(eu.shape[0], dtype=np.bool_)
    taken = 0
    for e in range(eu.shape[0]):
        ru = _find(parent, eu[e])
        rv = _find(parent, ev[e])
        if ru != rv:
            parent[ru] = rv
            keep[e] = True
            taken += 1
            if taken == n_nodes - 1:
                break
    return keep


@njit(cache=True)
def segment_tree_select(n_nodes, eu, ev, ew, k):
    """Two-phase selection: segmentation-constrained Kruskal, then plain
    Kruskal over the leftovers to link the segments into one tree.

    Phase 1 joins components A, B over edge weight w only when
    w <= min(Int(A) + k/|A|, Int(B) + k/|B|); since edges ascend, the
    merged component's internal maximum becomes w.
    """
    parent = np.arange(n_nodes)
    size = np.ones(n_nodes, dtype=np.int64)
    internal = np.zeros(n_nodes)
    keep = np.zeros(eu.shape[0], dtype=np.bool_)
    for e in range(eu.shape[0]):
        ru = _find(parent, eu[e])
        rv = _find(parent, ev[e])
        if ru == rv:
            continue
        w = ew[e]
        if w <= min(internal[ru] + k / size[ru], internal[rv] + k / size[rv]):
            parent[ru] = rv
            size[rv] += size[ru]
            internal[rv] = w
            keep[e] = True
    for e in range(eu.shape[0]):
        if keep[e]:
            continue
        ru = _find(parent, eu[e])
        rv = _find(parent, ev[e])
        if ru != rv:
            parent[ru] = rv
            size[rv] += size[ru]
            if ew[e] > internal[rv]:
                internal[rv] = ew[e]
            keep[e] = True
    return keep


@njit(cache=True)
def bfs_root(n_nodes, adj_start, adj_node, adj_weight, root):
    """Orient an undirected tree (CSR adjacency) away from root via BFS.

    Returns (parent, parent_weight, order, visited_count); order is
    root-first, so reversing it gives a children-before-parents sweep.
    """
    parent = np.full(n_nodes, -1, dtype=np.int64)
    pweight = np.zeros(n_nodes)
    order = np.empty(n_nodes, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=np.bool_)
    order[0] = root
    seen[root] = True
    head = 0
    tail = 1
    while head < tail:
        v = order[head]
        head += 1
        for idx in range(adj_start[v], adj_start[v + 1]):
            u = adj_node[idx]
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                pweight[u] = adj_weight[idx]
                order[tail] = u
                tail += 1
    return parent, pweight, order, tail


@njit(cache=True)
def tree_filter(flat, parent, similarity, up_order):
    """Two-pass geodesic-kernel filtering of (N, C) data over a rooted tree.

    up_order must list children before parents. Pass 1 accumulates subtree
    sums scaled by each hop's similarity s = exp(-w/sigma); pass 2
    propagates the complement down so every node ends up with the full
    kernel-weighted sum over all N nodes.
    """
    n, c = flat.shape
    up = flat.copy()
    for i in range(n):
        v = up_order[i]
        p = parent[v]
        if p >= 0:
            sv = similarity[v]
            for j in range(c):
                up[p, j] += sv * up[v, j]
    out = np.empty_like(up)
    for i in range(n - 1, -1, -1):
        v = up_order[i]
        p = parent[v]
        if p < 0:
            for j in range(c):
                out[v, j] = up[v, j]
        else:
            sv = similarity[v]
            comp = 1.0 - sv * sv
            for j in range(c):
                out[v, j] = sv * out[p, j] + comp * up[v, j]
    return out
