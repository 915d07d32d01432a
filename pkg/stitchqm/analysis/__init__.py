"""ABOUTME: Seasonal statistics and skill metrics.
ABOUTME: Season splitting, stationarity t-tests and quantile-based evaluation of corrections."""

from stitchqm.analysis.metrics import (
    MetricDiff,
    MetricsReport,
    PixelMetrics,
    QuantileGrid,
    aggregate_report,
    compute_pixel_metrics,
    difference_table,
    dry_prob_diff,
    mae,
    mae95sup,
    metric_diff,
    rmse,
)
from stitchqm.analysis.seasons import (
    Season,
    SeasonalSample,
    TTestReport,
    combine_triangles,
    extract_sample,
    month_groups,
    rejection_proportions,
    split_seasons,
    ttest_means,
)

__all__ = [
    "MetricDiff",
    "MetricsReport",
    "PixelMetrics",
    "QuantileGrid",
    "Season",
    "SeasonalSample",
    "TTestReport",
    "aggregate_report",
    "combine_triangles",
    "compute_pixel_metrics",
    "difference_table",
    "dry_prob_diff",
    "extract_sample",
    "mae",
    "mae95sup",
    "metric_diff",
    "month_groups",
    "rejection_proportions",
    "rmse",
    "split_seasons",
    "ttest_means",
]
