"""Pipeline orchestration and the benchmark command-line interface.

Subcommands:
  run          one stereo pair end to end, JSON report on stdout
  bench        every (entry, method, cross-scale) combination of a manifest
  sweep-lambda aggregate error of one method across a list of lambdas

Configuration is a flat `key = value` text file; any flag given on the
command line overrides the file. Unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .aggregators import AggregatorKind, aggregate, aggregator_name, make_aggregator
from .core import ColorImage, CostVolume, DisparityMap
from .cost import CensusParams, CostParams, GradCostParams, build_cost_volume, levels_at_scale
from .crossscale import (
    CostPyramid,
    assert_complexity_bound,
    fuse,
    row0_inverse_weights,
)
from .evaluate import EvalReport, avg_abs_error, error_rate, wta
from .imageio import DatasetEntry, load_gt_disparity, load_image, load_manifest, save_disparity
from .pyramid import build_pyramid


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass(frozen=True)
class RunConfig:
    entry: DatasetEntry
    cost_method: str = "grad"
    cost_params: Optional[CostParams] = None
    aggregator: AggregatorKind = None  # type: ignore[assignment]
    cross_scale: bool = True
    scales: int = 4
    lam: float = 0.3
    threshold: float = 1.0
    out_disp: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.aggregator is None:
            object.__setattr__(self, "aggregator", make_aggregator("box"))
        if self.scales < 0:
            raise ValueError("scales must be >= 0")
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        if not self.threshold >= 0:
            raise ValueError("threshold must be >= 0")
        if self.cost_method not in ("grad", "census"):
            raise ValueError("cost must be 'grad' or 'census'")


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as e:
        raise PipelineError(f"stage '{name}': {e}") from e


def compute_disparity(
    left: ColorImage,
    right: ColorImage,
    max_disparity: int,
    cost_method: str = "grad",
    cost_params: Optional[CostParams] = None,
    kind: Optional[AggregatorKind] = None,
    cross_scale: bool = True,
    scales: int = 4,
    lam: float = 0.3,
) -> tuple[DisparityMap, CostVolume, float]:
    """Core pipeline on in-memory images: per-scale cost volumes,
    per-scale aggregation, inter-scale fusion, WTA.

    With cross_scale off, coarser scales are never built and the result is
    plain single-scale aggregation. Returns (disparity, fused volume,
    runtime in ms over the cost/aggregate/fuse stages).
    """
    if kind is None:
        kind = make_aggregator("box")
    S = scales if cross_scale else 0
    assert_complexity_bound(left.width, left.height, max_disparity, S)

    t0 = time.perf_counter()
    if not cross_scale:
        vol = _stage("cost", build_cost_volume, left, right, max_disparity, cost_method, cost_params)
        fused = _stage("aggregate", aggregate, vol, left, kind)
    else:
        pyr_l = _stage("pyramid", build_pyramid, left, scales)
        pyr_r = _stage("pyramid", build_pyramid, right, scales)
        aggregated = []
        for s in range(scales + 1):
            L_s = levels_at_scale(max_disparity, s)
            vol_s = _stage(
                "cost", build_cost_volume, pyr_l[s], pyr_r[s], L_s, cost_method, cost_params
            )
            aggregated.append(_stage("aggregate", aggregate, vol_s, pyr_l[s], kind))
        weights = _stage("fuse", row0_inverse_weights, scales, lam)
        fused = _stage("fuse", fuse, CostPyramid(tuple(aggregated)), weights)
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    return _stage("wta", wta, fused), fused, runtime_ms


def run_pipeline(cfg: RunConfig) -> tuple[DisparityMap, EvalReport]:
    """Full run for one dataset entry: load, compute, evaluate, save."""
    entry = cfg.entry
    _stage("load", entry.check_files)
    left = _stage("load", load_image, entry.left_path)
    right = _stage("load", load_image, entry.right_path)
    disp, _, runtime_ms = compute_disparity(
        left,
        right,
        entry.max_disparity,
        cfg.cost_method,
        cfg.cost_params,
        cfg.aggregator,
        cfg.cross_scale,
        cfg.scales,
        cfg.lam,
    )
    gt, mask = _stage("evaluate", load_gt_disparity, entry)
    report = EvalReport(
        name=entry.name,
        method=aggregator_name(cfg.aggregator),
        cross_scale=cfg.cross_scale,
        error_rate=_stage("evaluate", error_rate, disp, gt, mask, cfg.threshold),
        avg_err=_stage("evaluate", avg_abs_error, disp, gt, mask),
        threshold=cfg.threshold,
        evaluated_pixels=mask.count,
        runtime_ms=runtime_ms,
    )
    if cfg.out_disp is not None:
        _stage("save", save_disparity, disp, entry.gt_scale, cfg.out_disp)
    return disp, report


_STDOUT = object()  # sentinel: resolve to the current sys.stdout at call time


def run_benchmark(
    manifest_path,
    methods: Sequence[str],
    cross_flags: Sequence[bool],
    base: Optional[RunConfig] = None,
    out=_STDOUT,
) -> tuple[list[EvalReport], list[EvalReport]]:
    """One run per (entry, method, cross-scale flag); failures are reported
    on stderr and skip only their own run. Returns (per-run reports,
    aggregate mean rows, one per method+flag). out=None silences the
    per-run JSON lines."""
    if out is _STDOUT:
        out = sys.stdout
    entries = load_manifest(manifest_path)
    reports: list[EvalReport] = []
    aggregates: list[EvalReport] = []
    for method in methods:
        for flag in cross_flags:
            group: list[EvalReport] = []
            for entry in entries:
                cfg = _config_for(entry, method, flag, base)
                try:
                    _, rep = run_pipeline(cfg)
                except Exception as e:
                    print(f"error: {entry.name} {method} cross_scale={flag}: {e}", file=sys.stderr)
                    continue
                group.append(rep)
                reports.append(rep)
                if out is not None:
                    print(rep.to_json(), file=out, flush=True)
            if group:
                agg = EvalReport(
                    name="mean",
                    method=method,
                    cross_scale=flag,
                    error_rate=sum(r.error_rate for r in group) / len(group),
                    avg_err=sum(r.avg_err for r in group) / len(group),
                    threshold=group[0].threshold,
                    evaluated_pixels=sum(r.evaluated_pixels for r in group),
                    runtime_ms=sum(r.runtime_ms for r in group),
                )
                aggregates.append(agg)
                if out is not None:
                    print(agg.to_json(), file=out, flush=True)
    return reports, aggregates


def sweep_lambda(
    manifest_path,
    method: str,
    lambdas: Sequence[float],
    base: Optional[RunConfig] = None,
    out=_STDOUT,
) -> list[tuple[float, EvalReport]]:
    """Aggregate cross-scale error of one method for each lambda."""
    if out is _STDOUT:
        out = sys.stdout
    rows = []
    for lam in lambdas:
        b = base
        if b is not None:
            b = replace(b, lam=lam)
        else:
            entries = load_manifest(manifest_path)
            b = replace(_config_for(entries[0], method, True, None), lam=lam)
        _, aggs = run_benchmark(manifest_path, [method], [True], base=b, out=None)
        for agg in aggs:
            rows.append((lam, agg))
            if out is not None:
                print(f'{{"lambda": {lam}}} {agg.to_json()}', file=out, flush=True)
    return rows


def _config_for(
    entry: DatasetEntry, method: str, cross: bool, base: Optional[RunConfig]
) -> RunConfig:
    if base is None:
        return RunConfig(entry=entry, aggregator=make_aggregator(method), cross_scale=cross)
    kind = base.aggregator if aggregator_name(base.aggregator) == method else make_aggregator(method)
    return replace(base, entry=entry, aggregator=kind, cross_scale=cross)


# ---------------------------------------------------------------------------
# configuration parsing

_BOOLS = {"on": True, "true": True, "yes": True, "1": True,
          "off": False, "false": False, "no": False, "0": False}

# every legal config key with its raw-string parser
_KEY_PARSERS = {
    "manifest": str,
    "entry": str,
    "cost": str,
    "method": str,
    "cross_scale": None,  # bool, handled specially
    "scales": int,
    "lambda": float,
    "threshold": float,
    "out_disp": str,
    "alpha": float,
    "tau1": float,
    "tau2": float,
    "census_w": int,
    "census_h": int,
    "box_radius": int,
    "bf_radius": int,
    "bf_sigma_s": float,
    "bf_sigma_c": float,
    "gf_radius": int,
    "gf_eps": float,
    "nl_sigma": float,
    "st_sigma": float,
    "st_k": float,
}


def _parse_kv_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def parse_config(config_file=None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from an optional flat config file plus overrides
    (normally the CLI flags). Overrides win. Unknown keys, bad types, and
    constraint violations raise ValueError naming the offender."""
    raw: dict[str, object] = {}
    if config_file is not None:
        raw.update(_parse_kv_file(config_file))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v

    vals: dict[str, object] = {}
    for key, value in raw.items():
        if key not in _KEY_PARSERS:
            raise ValueError(f"unknown config key {key!r}")
        if key == "cross_scale":
            if isinstance(value, bool):
                vals[key] = value
                continue
            token = str(value).lower()
            if token not in _BOOLS:
                raise ValueError(f"cross_scale must be on/off, got {value!r}")
            vals[key] = _BOOLS[token]
            continue
        parser = _KEY_PARSERS[key]
        try:
            vals[key] = parser(value)
        except (TypeError, ValueError):
            raise ValueError(f"config key {key!r}: cannot parse {value!r} as {parser.__name__}")

    if "manifest" not in vals:
        raise ValueError("config needs 'manifest' (path to a dataset manifest)")
    entries = load_manifest(vals["manifest"])
    if "entry" in vals:
        matches = [e for e in entries if e.name == vals["entry"]]
        if not matches:
            raise ValueError(f"entry {vals['entry']!r} not found in manifest")
        entry = matches[0]
    else:
        entry = entries[0]

    cost_method = str(vals.get("cost", "grad"))
    if cost_method not in ("grad", "census"):
        raise ValueError("cost must be 'grad' or 'census'")
    if cost_method == "grad":
        cost_params: CostParams = GradCostParams(
            alpha=float(vals.get("alpha", GradCostParams.alpha)),
            tau1=float(vals.get("tau1", GradCostParams.tau1)),
            tau2=float(vals.get("tau2", GradCostParams.tau2)),
        )
        default_lam, default_threshold = 0.3, 1.0
    else:
        cost_params = CensusParams(
            win_w=int(vals.get("census_w", CensusParams.win_w)),
            win_h=int(vals.get("census_h", CensusParams.win_h)),
        )
        default_lam, default_threshold = 1.0, 3.0

    method = str(vals.get("method", "box"))
    agg_params: dict[str, object] = {}
    if method == "box" and "box_radius" in vals:
        agg_params["radius"] = vals["box_radius"]
    elif method == "bf":
        for src, dst in (("bf_radius", "radius"), ("bf_sigma_s", "sigma_s"), ("bf_sigma_c", "sigma_c")):
            if src in vals:
                agg_params[dst] = vals[src]
    elif method == "gf":
        for src, dst in (("gf_radius", "radius"), ("gf_eps", "eps")):
            if src in vals:
                agg_params[dst] = vals[src]
    elif method == "nl" and "nl_sigma" in vals:
        agg_params["sigma"] = vals["nl_sigma"]
    elif method == "st":
        for src, dst in (("st_sigma", "sigma"), ("st_k", "k")):
            if src in vals:
                agg_params[dst] = vals[src]
    aggregator = make_aggregator(method, **agg_params)

    return RunConfig(
        entry=entry,
        cost_method=cost_method,
        cost_params=cost_params,
        aggregator=aggregator,
        cross_scale=bool(vals.get("cross_scale", True)),
        scales=int(vals.get("scales", 4)),
        lam=float(vals.get("lambda", default_lam)),
        threshold=float(vals.get("threshold", default_threshold)),
        out_disp=Path(vals["out_disp"]) if "out_disp" in vals else None,
    )


# ---------------------------------------------------------------------------
# argparse front end

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    p.add_argument("--manifest", type=Path, default=None, help="dataset manifest path")
    p.add_argument("--cost", choices=["grad", "census"], default=None,
                   help="matching cost (default grad; census switches lambda/threshold defaults to 1.0/3)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="inter-scale regularization strength (default 0.3, census 1.0)")
    p.add_argument("--scales", type=int, default=None, help="pyramid scales S (default 4)")
    p.add_argument("--threshold", type=float, default=None,
                   help="bad-pixel threshold (default 1, census 3)")


def _overrides(args: argparse.Namespace, **extra) -> dict:
    out = {
        "manifest": str(args.manifest) if args.manifest is not None else None,
        "cost": args.cost,
        "lambda": args.lam,
        "scales": args.scales,
        "threshold": args.threshold,
    }
    out.update(extra)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(
        prog="csstereo",
        description="Stereo matching by cost-volume filtering with cross-scale aggregation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one stereo pair and print its JSON report")
    _add_common_flags(p_run)
    p_run.add_argument("--entry", default=None, help="manifest entry name (default: first)")
    p_run.add_argument("--method", choices=["box", "bf", "gf", "nl", "st"], default=None,
                       help="aggregation kernel (default box)")
    p_run.add_argument("--cross-scale", dest="cross_scale", choices=["on", "off"], default=None)
    p_run.add_argument("--out-disp", dest="out_disp", type=Path, default=None,
                       help="write the disparity map as 8-bit PGM")

    p_bench = sub.add_parser("bench", help="run a manifest across methods")
    _add_common_flags(p_bench)
    p_bench.add_argument("--methods", default="box,nl,st,gf",
                         help="comma-separated kernel list (default box,nl,st,gf)")
    p_bench.add_argument("--cross-scale", dest="cross_scale", choices=["on", "off", "both"],
                         default="both")

    p_sweep = sub.add_parser("sweep-lambda", help="aggregate error per lambda value")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--method", choices=["box", "bf", "gf", "nl", "st"], default="box")
    p_sweep.add_argument("--lambdas", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                         help="comma-separated lambda values")

    args = ap.parse_args(argv)
    try:
        if args.command == "run":
            cfg = parse_config(args.config, _overrides(
                args,
                entry=args.entry,
                method=args.method,
                cross_scale=args.cross_scale,
                out_disp=str(args.out_disp) if args.out_disp is not None else None,
            ))
            _, report = run_pipeline(cfg)
            print(report.to_json())
            return 0

        base = parse_config(args.config, _overrides(args))
        manifest = args.manifest
        if manifest is None and args.config is not None:
            cfg_manifest = _parse_kv_file(args.config).get("manifest")
            if cfg_manifest is not None:
                manifest = Path(cfg_manifest)
        if manifest is None:
            raise ValueError("a manifest is required (--manifest or config key)")
        if args.command == "bench":
            methods = [m.strip() for m in args.methods.split(",") if m.strip()]
            flags = {"on": [True], "off": [False], "both": [False, True]}[args.cross_scale]
            run_benchmark(manifest, methods, flags, base=base)
            return 0
        if args.command == "sweep-lambda":
            lambdas = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
            sweep_lambda(manifest, args.method, lambdas, base=base)
            return 0
    except (ValueError, PipelineError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
