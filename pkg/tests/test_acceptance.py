"""Acceptance suite: one recorded PASS/FAIL line per criterion.

Criteria 1-3 need the benchmark image files under data/ (see
data/README.md); without them those tests skip and say so. Criteria 4-7
are synthetic and always run.
"""

import math
import time

import numpy as np
import pytest

from conftest import middlebury_entries, shifted_pair
from csstereo import (
    BilateralAggregator,
    BoxAggregator,
    CensusParams,
    ColorImage,
    CostPyramid,
    CostVolume,
    DisparityMap,
    EvalMask,
    GradCostParams,
    GuidedAggregator,
    NonLocalAggregator,
    PixelCoord,
    RunConfig,
    SegmentTreeAggregator,
    aggregate,
    assert_complexity_bound,
    bilateral_aggregate,
    box_aggregate,
    build_cost_volume,
    build_mst,
    build_segment_tree,
    build_tridiagonal,
    compute_disparity,
    error_rate,
    fuse,
    guided_aggregate,
    levels_at_scale,
    luminance,
    make_aggregator,
    pyramid_cell_count,
    row0_inverse_weights,
    run_pipeline,
    solve_full_system,
    tree_aggregate,
    wta,
)
from csstereo.aggregators import _guided_filter_channels, _with_ones
from csstereo.cost import census_cost, grad_cost
from csstereo.crossscale import _sampled_on_fine_grid
from test_aggregators import explicit_guided_kernel, geodesic_reference

RESULTS: list[str] = []

KERNELS = ("box", "nl", "st", "gf")
TEDDY_GOLDEN = {
    ("box", False): 14.23,
    ("box", True): 11.18,
    ("nl", False): 8.60,
    ("nl", True): 5.74,
    ("st", False): 9.78,
    ("st", True): 6.22,
    ("gf", False): 8.25,
    ("gf", True): 6.99,
}

_GRID: dict[tuple[str, str, bool, float], float] = {}


def _check(criterion: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def _require_dataset(criterion: str):
    entries = middlebury_entries()
    if entries is None:
        RESULTS.append(
            f"[SKIP] {criterion}: benchmark images not present under data/ "
            "(see data/README.md)"
        )
        pytest.skip("benchmark images not present; see data/README.md")
    return entries


def _grid_error(entry, method: str, cross: bool, lam: float = 0.3) -> float:
    key = (entry.name, method, cross, lam)
    if key not in _GRID:
        cfg = RunConfig(entry=entry, aggregator=make_aggregator(method),
                        cross_scale=cross, lam=lam)
        _, rep = run_pipeline(cfg)
        _GRID[key] = rep.error_rate
    return _GRID[key]


def make_pyramid(rng, h, w, L, S) -> CostPyramid:
    vols = []
    ch, cw = h, w
    for s in range(S + 1):
        vols.append(CostVolume(rng.random((ch, cw, levels_at_scale(L, s)))))
        ch, cw = -(-ch // 2), -(-cw // 2)
    return CostPyramid(tuple(vols))


class TestAcceptance:
    def test_criterion_1_cross_scale_improves_every_kernel(self):
        entries = _require_dataset("criterion 1 (cross-scale beats single-scale)")
        parts = []
        ok = True
        for method in KERNELS:
            single = sum(_grid_error(e, method, False) for e in entries) / len(entries)
            cross = sum(_grid_error(e, method, True) for e in entries) / len(entries)
            ok = ok and cross < single
            parts.append(f"{method} {single:.2f}->{cross:.2f}")
        tsukuba = [e for e in entries if e.name == "tsukuba"]
        if tsukuba:
            bf_single = _grid_error(tsukuba[0], "bf", False)
            bf_cross = _grid_error(tsukuba[0], "bf", True)
            RESULTS.append(
                f"[INFO] criterion 1, bf on tsukuba only: {bf_single:.2f}->{bf_cross:.2f}"
            )
        _check(
            "criterion 1 (cross-scale beats single-scale)",
            ok,
            "mean non-occ error over 4 pairs: " + ", ".join(parts),
        )

    def test_criterion_2_teddy_matches_reference_numbers(self):
        entries = _require_dataset("criterion 2 (teddy reference error rates)")
        teddy = [e for e in entries if e.name == "teddy"]
        assert teddy, "manifest must include a 'teddy' entry"
        parts = []
        ok = True
        for (method, cross), golden in TEDDY_GOLDEN.items():
            got = _grid_error(teddy[0], method, cross)
            ok = ok and abs(got - golden) <= 2.0
            tag = f"S+{method}" if cross else method
            parts.append(f"{tag} {got:.2f} (ref {golden})")
        _check(
            "criterion 2 (teddy reference error rates, +/-2.0)",
            ok,
            ", ".join(parts),
        )

    def test_criterion_3_lambda_sweep_interior_minimum(self):
        entries = _require_dataset("criterion 3 (lambda sweep)")

        def mean_err(lam):
            return sum(_grid_error(e, "box", True, lam) for e in entries) / len(entries)

        at_default = mean_err(0.3)
        at_zero = mean_err(0.0)
        at_ten = mean_err(10.0)
        ok = at_default < at_zero and at_default < at_ten
        _check(
            "criterion 3 (S+box error dips at lambda=0.3)",
            ok,
            f"lambda 0: {at_zero:.2f}, 0.3: {at_default:.2f}, 10: {at_ten:.2f}",
        )

    def test_criterion_4_fusion_weights_and_full_solve(self):
        rng = np.random.default_rng(4)
        max_sum_dev = 0.0
        max_residual = 0.0
        max_grad = 0.0
        max_ms = 0.0
        unit_ok = True
        for S in range(1, 7):
            for lam in (0.0, 0.3, 1.0, 10.0):
                t0 = time.perf_counter()
                weights = row0_inverse_weights(S, lam)
                pyr = make_pyramid(rng, 5, 5, 4, S)  # 100 fine-grid systems
                comps = solve_full_system(pyr, lam)
                max_ms = max(max_ms, (time.perf_counter() - t0) * 1000.0)

                max_sum_dev = max(max_sum_dev, abs(float(weights.w.sum()) - 1.0))
                if lam == 0.0:
                    e0 = np.zeros(S + 1)
                    e0[0] = 1.0
                    unit_ok = unit_ok and np.array_equal(weights.w, e0)

                A = build_tridiagonal(S, lam)
                stack = np.stack([_sampled_on_fine_grid(pyr, s) for s in range(S + 1)])
                solved = np.stack([c.data for c in comps])
                residual = np.einsum("st,thwl->shwl", A, solved) - stack
                max_residual = max(max_residual, float(np.abs(residual).max()))

                h = 1e-6
                for y, x, l in ((0, 0, 0), (2, 3, 1), (4, 4, 3)):
                    v = stack[:, y, x, l]
                    z = solved[:, y, x, l]

                    def objective(q):
                        return float(np.sum((q - v) ** 2) + lam * np.sum(np.diff(q) ** 2))

                    for s in range(S + 1):
                        zp, zm = z.copy(), z.copy()
                        zp[s] += h
                        zm[s] -= h
                        g = abs(objective(zp) - objective(zm)) / (2 * h)
                        max_grad = max(max_grad, g)

        ok = (
            max_sum_dev <= 1e-12
            and unit_ok
            and max_residual < 1e-10
            and max_grad < 1e-8
            and max_ms < 1000.0
        )
        _check(
            "criterion 4 (weights sum to 1, lambda=0 exact, residual, stationarity, runtime)",
            ok,
            f"max |sum-1| {max_sum_dev:.1e}, lambda=0 exact {unit_ok}, "
            f"max residual {max_residual:.1e}, max gradient {max_grad:.1e}, "
            f"max solve {max_ms:.1f} ms",
        )

    def test_criterion_5_fast_paths_match_oracles(self):
        rng = np.random.default_rng(5)

        # two-pass tree filtering vs explicit geodesic kernel, 20x20
        guide = ColorImage(rng.random((20, 20, 3)))
        vol = CostVolume(rng.random((20, 20, 3)))
        tree_rel = 0.0
        for tree in (build_mst(guide), build_segment_tree(guide, 1200 / 255)):
            fast = tree_aggregate(vol, tree, 0.1).data
            ref = geodesic_reference(tree, vol, 0.1)
            tree_rel = max(tree_rel, float((np.abs(fast - ref) / (np.abs(ref) + 1e-30)).max()))

        # guided filter fast path vs its explicit kernel matrix, 12x12
        g12 = rng.random((12, 12, 3))
        v12 = rng.random((12, 12, 2))
        W = explicit_guided_kernel(g12, 2, 1e-4)
        fast_gf = _guided_filter_channels(_with_ones(CostVolume(v12)), g12, 2, 1e-4)
        gf_dev = 0.0
        for k in range(2):
            ref = (W @ v12[:, :, k].ravel()).reshape(12, 12)
            gf_dev = max(gf_dev, float(np.abs(fast_gf[:, :, k] - ref).max()))

        # box and bilateral vs direct double loops
        a = rng.random((7, 7, 2))
        bg = rng.random((7, 7, 3))
        box_ref = np.zeros_like(a)
        bf_ref = np.zeros_like(a)
        for y in range(7):
            for x in range(7):
                ys = slice(max(0, y - 3), min(6, y + 3) + 1)
                xs = slice(max(0, x - 3), min(6, x + 3) + 1)
                box_ref[y, x] = a[ys, xs].mean(axis=(0, 1))
                acc = np.zeros(2)
                z = 0.0
                for yy in range(max(0, y - 2), min(6, y + 2) + 1):
                    for xx in range(max(0, x - 2), min(6, x + 2) + 1):
                        ds = (yy - y) ** 2 + (xx - x) ** 2
                        dc = float(np.sum((bg[y, x] - bg[yy, xx]) ** 2))
                        wgt = math.exp(-ds / (2 * 2.0**2)) * math.exp(-dc / (2 * 0.2**2))
                        acc += wgt * a[yy, xx]
                        z += wgt
                bf_ref[y, x] = acc / z
        box_dev = float(np.abs(box_aggregate(CostVolume(a), 3).data - box_ref).max())
        bf_dev = float(
            np.abs(
                bilateral_aggregate(CostVolume(a), ColorImage(bg), 2.0, 0.2, 2).data - bf_ref
            ).max()
        )

        # vectorized cost volumes vs per-pixel scalar costs, bit for bit
        left, right = shifted_pair(rng, 8, 8, 2)
        gp, cp = GradCostParams(), CensusParams()
        vol_g = build_cost_volume(left, right, 5, method="grad", params=gp)
        vol_c = build_cost_volume(left, right, 5, method="census", params=cp)
        gl, gr = luminance(left), luminance(right)
        exact = True
        for y in range(8):
            for x in range(8):
                for l in range(5):
                    i = PixelCoord(x, y)
                    exact = exact and vol_g.data[y, x, l] == grad_cost(left, right, i, l, gp)
                    exact = exact and vol_c.data[y, x, l] == census_cost(gl, gr, i, l, cp)

        ok = tree_rel < 1e-6 and gf_dev < 1e-5 and box_dev < 1e-6 and bf_dev < 1e-6 and exact
        _check(
            "criterion 5 (fast paths match independent oracles)",
            ok,
            f"tree rel {tree_rel:.1e}, gf {gf_dev:.1e}, box {box_dev:.1e}, "
            f"bf {bf_dev:.1e}, cost volumes exact {exact}",
        )

    def test_criterion_6_conservation_and_wta_invariance(self):
        rng = np.random.default_rng(6)
        guide = ColorImage(rng.random((8, 8, 3)))
        kinds = [
            BoxAggregator(),
            BilateralAggregator(radius=3),
            make_aggregator("gf", radius=2),
            NonLocalAggregator(),
            SegmentTreeAggregator(),
        ]

        const = CostVolume(np.full((8, 8, 3), 0.44))
        fix_dev = 0.0
        for kind in kinds:
            fix_dev = max(fix_dev, float(np.abs(aggregate(const, guide, kind).data - 0.44).max()))
        vols = []
        ch, cw = 8, 8
        for s in range(4):
            vols.append(CostVolume(np.full((ch, cw, levels_at_scale(3, s)), 0.44)))
            ch, cw = -(-ch // 2), -(-cw // 2)
        fused = fuse(CostPyramid(tuple(vols)), row0_inverse_weights(3, 0.7))
        fix_dev = max(fix_dev, float(np.abs(fused.data - 0.44).max()))

        vol = CostVolume(rng.random((8, 8, 3)))
        lo = vol.data.min(axis=(0, 1)) - 1e-12
        hi = vol.data.max(axis=(0, 1)) + 1e-12
        bounds_ok = True
        for kind in kinds:
            if isinstance(kind, GuidedAggregator):
                continue  # guided kernel weights may be negative
            out = aggregate(vol, guide, kind).data
            bounds_ok = bounds_ok and bool(np.all(out >= lo) and np.all(out <= hi))

        base = wta(vol).data
        wta_ok = np.array_equal(base, wta(CostVolume(vol.data + 3.5)).data) and np.array_equal(
            base, wta(CostVolume(vol.data * 0.125)).data
        )

        ok = fix_dev < 1e-6 and bounds_ok and wta_ok
        _check(
            "criterion 6 (constant fixpoint, kernel bounds, WTA invariance)",
            ok,
            f"max fixpoint dev {fix_dev:.1e}, bounds {bounds_ok}, wta invariant {wta_ok}",
        )

    def test_criterion_7_pyramid_work_bound(self):
        geoms = [(384, 288, 16), (434, 383, 20), (450, 375, 60), (450, 375, 60)]
        ok = True
        for w, h, L in geoms:
            for S in range(7):
                total = pyramid_cell_count(w, h, L, S)
                bound = (8.0 / 7.0) * w * h * L * 1.05
                ok = ok and total <= bound
                assert_complexity_bound(w, h, L, S)
        # the pipeline enforces the bound on every run
        img = ColorImage(np.zeros((2, 2, 3)))
        try:
            compute_disparity(img, img, 1, cross_scale=True, scales=1)
            enforced = False
        except AssertionError:
            enforced = True
        ok = ok and enforced
        _check(
            "criterion 7 (total pyramid cells within 8/7 * 1.05 of finest volume)",
            ok,
            f"teddy S=4: {pyramid_cell_count(450, 375, 60, 4)} <= "
            f"{(8 / 7) * 450 * 375 * 60 * 1.05:.0f}; per-run assert enforced {enforced}",
        )

    def test_census_smoke_known_shift(self):
        rng = np.random.default_rng(62)
        h, w, shift = 30, 50, 3
        left, right = shifted_pair(rng, h, w, shift)
        vol = build_cost_volume(left, right, 8, method="census", params=CensusParams())
        disp = wta(box_aggregate(vol, 3))
        gt = DisparityMap(np.full((h, w), shift, dtype=np.int32))
        m = np.zeros((h, w), dtype=bool)
        m[:, shift + 4 + 3 : w - 5 - 3 + 1] = True
        rate = error_rate(disp, gt, EvalMask(m), 0.0)
        _check(
            "census smoke test (planted shift recovered exactly)",
            rate == 0.0,
            f"error rate {rate} at threshold 0",
        )
