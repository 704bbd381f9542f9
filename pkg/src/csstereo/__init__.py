"""Stereo matching by cost-volume filtering with cross-scale aggregation."""

from .aggregators import (
    AggregatorKind,
    BilateralAggregator,
    BoxAggregator,
    GuidedAggregator,
    NonLocalAggregator,
    SegmentTreeAggregator,
    SpanningTree,
    aggregate,
    bilateral_aggregate,
    box_aggregate,
    build_mst,
    build_segment_tree,
    guided_aggregate,
    make_aggregator,
    tree_aggregate,
)
from .cli import (
    PipelineError,
    RunConfig,
    compute_disparity,
    parse_config,
    run_benchmark,
    run_pipeline,
    sweep_lambda,
)
from .core import (
    ColorImage,
    CostVolume,
    DimensionError,
    DisparityMap,
    GrayImage,
    PixelCoord,
    luminance,
    x_gradient,
)
from .cost import (
    CensusParams,
    GradCostParams,
    build_cost_volume,
    census_cost,
    census_signature,
    grad_cost,
    levels_at_scale,
)
from .crossscale import (
    CostPyramid,
    InterScaleWeights,
    assert_complexity_bound,
    build_tridiagonal,
    fuse,
    map_coord,
    pyramid_cell_count,
    row0_inverse_weights,
    sample_coarse_cost,
    solve_full_system,
)
from .evaluate import EvalReport, avg_abs_error, error_rate, wta
from .imageio import (
    DatasetEntry,
    EvalMask,
    MalformedFileError,
    dump_cost_volume,
    load_cost_volume,
    load_gt_disparity,
    load_image,
    load_manifest,
    save_disparity,
)
from .pyramid import ImagePyramid, build_pyramid, gaussian_downsample

__version__ = "0.1.0"

__all__ = [
    "AggregatorKind",
    "BilateralAggregator",
    "BoxAggregator",
    "CensusParams",
    "ColorImage",
    "CostPyramid",
    "CostVolume",
    "DatasetEntry",
    "DimensionError",
    "DisparityMap",
    "EvalMask",
    "EvalReport",
    "GradCostParams",
    "GrayImage",
    "GuidedAggregator",
    "ImagePyramid",
    "InterScaleWeights",
    "MalformedFileError",
    "NonLocalAggregator",
    "PipelineError",
    "PixelCoord",
    "RunConfig",
    "SegmentTreeAggregator",
    "SpanningTree",
    "aggregate",
    "assert_complexity_bound",
    "avg_abs_error",
    "bilateral_aggregate",
    "box_aggregate",
    "build_cost_volume",
    "build_mst",
    "build_pyramid",
    "build_segment_tree",
    "build_tridiagonal",
    "census_cost",
    "census_signature",
    "compute_disparity",
    "dump_cost_volume",
    "error_rate",
    "fuse",
    "gaussian_downsample",
    "grad_cost",
    "guided_aggregate",
    "levels_at_scale",
    "load_cost_volume",
    "load_gt_disparity",
    "load_image",
    "load_manifest",
    "luminance",
    "make_aggregator",
    "map_coord",
    "parse_config",
    "pyramid_cell_count",
    "row0_inverse_weights",
    "run_benchmark",
    "run_pipeline",
    "sample_coarse_cost",
    "save_disparity",
    "solve_full_system",
    "sweep_lambda",
    "tree_aggregate",
    "wta",
    "x_gradient",
]
