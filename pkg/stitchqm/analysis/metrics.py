"""ABOUTME: Quantile-based skill metrics for corrected wet-day distributions.
ABOUTME: MAE, upper-tail MAE, RMSE, dry-day probability bias, baseline differences and boxplot summaries."""

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import polars as pl
from pydantic import BaseModel, ConfigDict, Field

from stitchqm.correction.ssr import dry_fraction
from stitchqm.distributions.models import FloatArray, empirical_quantiles
from stitchqm.exceptions import InsufficientSampleError, ProbabilityDomainError

METRIC_COLUMNS = ("mae", "mae95sup", "rmse", "dry_prob_diff")
REPORT_KEYS = ("lat", "lon", "season", "model")
SUMMARY_KEYS = ("season", "model", "metric")

UPPER_WINDOW = 0.95
MIN_UPPER_QUANTILES = 20
WHISKER_IQR = 1.5


class QuantileGrid(BaseModel):
    """Probabilities ``i / n`` for i = 1..n; the last one is the sample maximum."""

    model_config = ConfigDict(frozen=True)

    n_quantiles: int = Field(default=50, ge=1)

    @property
    def probs(self) -> FloatArray:
        """Quantile probabilities, strictly increasing."""
        return np.arange(1, self.n_quantiles + 1, dtype=np.float64) / self.n_quantiles

    @property
    def upper_start(self) -> int:
        """1-based first index of the upper-tail window, ``ceil(0.95 n)``."""
        return math.ceil(round(UPPER_WINDOW * self.n_quantiles, 9))


@dataclass(frozen=True)
class PixelMetrics:
    """Skill of one corrected pixel-season against its target."""

    mae: float
    mae95sup: float
    rmse: float
    dry_prob_diff: float


@dataclass(frozen=True)
class MetricDiff:
    """Signed metric differences F - G; negative values favor F."""

    mae: float
    mae95sup: float
    rmse: float
    dry_prob_diff: float


@dataclass(frozen=True)
class MetricsReport:
    """Per-pixel rows plus per-(season, model, metric) boxplot statistics and outliers."""

    rows: pl.DataFrame
    summary: pl.DataFrame
    outliers: pl.DataFrame


def quantile_errors(corrected_wet: npt.ArrayLike, target_wet: npt.ArrayLike, grid: QuantileGrid) -> FloatArray:
    """Differences of the empirical quantiles, corrected minus target, at ``grid.probs``.

    Raises:
        InsufficientSampleError: If either sample is empty.
    """
    corrected = np.asarray(corrected_wet, dtype=np.float64).ravel()
    target = np.asarray(target_wet, dtype=np.float64).ravel()
    if corrected.size == 0 or target.size == 0:
        raise InsufficientSampleError("quantile metrics need non-empty corrected and target samples")
    return empirical_quantiles(corrected, grid.probs) - empirical_quantiles(target, grid.probs)


def mae(corrected_wet: npt.ArrayLike, target_wet: npt.ArrayLike, grid: QuantileGrid | None = None) -> float:
    """Mean absolute quantile error (mm)."""
    return float(np.mean(np.abs(quantile_errors(corrected_wet, target_wet, grid or QuantileGrid()))))


def mae95sup(corrected_wet: npt.ArrayLike, target_wet: npt.ArrayLike, grid: QuantileGrid | None = None) -> float:
    """Mean absolute quantile error (mm) over indices ``ceil(0.95 n)..n``, divided by their count.

    Raises:
        ValueError: If the grid has fewer than 20 quantiles.
    """
    grid = grid or QuantileGrid()
    if grid.n_quantiles < MIN_UPPER_QUANTILES:
        raise ValueError(f"upper-tail MAE needs at least {MIN_UPPER_QUANTILES} quantiles, got {grid.n_quantiles}")
    errors = quantile_errors(corrected_wet, target_wet, grid)
    return float(np.mean(np.abs(errors[grid.upper_start - 1 :])))


def rmse(corrected_wet: npt.ArrayLike, target_wet: npt.ArrayLike, grid: QuantileGrid | None = None) -> float:
    """Root mean squared quantile error (mm)."""
    return float(np.sqrt(np.mean(quantile_errors(corrected_wet, target_wet, grid or QuantileGrid()) ** 2)))


def dry_prob_diff(target_alpha: float, model_alpha: float) -> float:
    """Target minus model dry-day probability; positive means the model is too wet.

    Raises:
        ProbabilityDomainError: If either probability is outside [0, 1].
    """
    for value in (target_alpha, model_alpha):
        if not 0.0 <= value <= 1.0:
            raise ProbabilityDomainError(f"dry-day probability {value!r} outside [0, 1]")
    return target_alpha - model_alpha


def metric_diff(m_f: PixelMetrics, m_g: PixelMetrics) -> MetricDiff:
    """Component-wise ``m_f - m_g``."""
    return MetricDiff(
        mae=m_f.mae - m_g.mae,
        mae95sup=m_f.mae95sup - m_g.mae95sup,
        rmse=m_f.rmse - m_g.rmse,
        dry_prob_diff=m_f.dry_prob_diff - m_g.dry_prob_diff,
    )


def compute_pixel_metrics(
    corrected: npt.ArrayLike,
    target: npt.ArrayLike,
    threshold_mm: float,
    grid: QuantileGrid | None = None,
) -> PixelMetrics:
    """Metrics of one pixel-season from full daily series; quantile metrics use wet days only.

    Quantile metrics are NaN when either series has no wet day.
    """
    grid = grid or QuantileGrid()
    corrected_arr = np.asarray(corrected, dtype=np.float64).ravel()
    target_arr = np.asarray(target, dtype=np.float64).ravel()
    corrected_wet = corrected_arr[corrected_arr > threshold_mm]
    target_wet = target_arr[target_arr > threshold_mm]
    dry = dry_prob_diff(dry_fraction(target_arr, threshold_mm), dry_fraction(corrected_arr, threshold_mm))
    if corrected_wet.size == 0 or target_wet.size == 0:
        return PixelMetrics(mae=np.nan, mae95sup=np.nan, rmse=np.nan, dry_prob_diff=dry)
    errors = np.abs(quantile_errors(corrected_wet, target_wet, grid))
    upper = float(np.mean(errors[grid.upper_start - 1 :])) if grid.n_quantiles >= MIN_UPPER_QUANTILES else np.nan
    return PixelMetrics(
        mae=float(np.mean(errors)),
        mae95sup=upper,
        rmse=float(np.sqrt(np.mean(errors**2))),
        dry_prob_diff=dry,
    )


def difference_table(rows: pl.DataFrame, baseline: str) -> pl.DataFrame:
    """Per-pixel differences baseline minus each other model, for every metric.

    Returns:
        Columns lat, lon, season, model, and ``<metric>_diff`` per metric; negative values
        favor the baseline.
    """
    keys = ["lat", "lon", "season"]
    base = rows.filter(pl.col("model") == baseline).select(
        *keys, *[pl.col(m).alias(f"{m}_base") for m in METRIC_COLUMNS]
    )
    others = rows.filter(pl.col("model") != baseline)
    joined = others.join(base, on=keys, how="inner")
    return joined.select(
        *keys,
        "model",
        *[(pl.col(f"{m}_base") - pl.col(m)).alias(f"{m}_diff") for m in METRIC_COLUMNS],
    ).sort([*keys, "model"])


def aggregate_report(rows: pl.DataFrame) -> MetricsReport:
    """Boxplot statistics per season, model and metric.

    Quartiles use linear interpolation; whiskers reach the most extreme values within 1.5 IQR
    of the quartiles; values beyond are listed as outliers. NaN pixels are excluded and counted.

    Args:
        rows: One row per (lat, lon, season, model) with the metric columns.
    """
    keys = list(SUMMARY_KEYS)
    long = rows.unpivot(
        index=list(REPORT_KEYS), on=list(METRIC_COLUMNS), variable_name="metric", value_name="value"
    )
    missing = pl.col("value").is_null() | pl.col("value").is_nan()
    counts = long.group_by(keys).agg(
        n=(~missing).sum().cast(pl.Int64),
        n_nan=missing.sum().cast(pl.Int64),
    )
    valid = long.filter(~missing)
    quartiles = valid.group_by(keys).agg(
        median=pl.col("value").median(),
        q1=pl.col("value").quantile(0.25, interpolation="linear"),
        q3=pl.col("value").quantile(0.75, interpolation="linear"),
    )
    fences = quartiles.with_columns(
        low_fence=pl.col("q1") - WHISKER_IQR * (pl.col("q3") - pl.col("q1")),
        high_fence=pl.col("q3") + WHISKER_IQR * (pl.col("q3") - pl.col("q1")),
    )
    flagged = valid.join(fences, on=keys, how="inner")
    inside = pl.col("value").is_between(pl.col("low_fence"), pl.col("high_fence"))
    whiskers = flagged.filter(inside).group_by(keys).agg(
        whisker_low=pl.col("value").min(),
        whisker_high=pl.col("value").max(),
    )
    outliers = flagged.filter(~inside).select(*keys, "lat", "lon", "value").sort([*keys, "lat", "lon"])
    summary = (
        counts.join(quartiles, on=keys, how="left")
        .join(whiskers, on=keys, how="left")
        .select(*keys, "n", "n_nan", "median", "q1", "q3", "whisker_low", "whisker_high")
        .sort(keys)
    )
    return MetricsReport(rows=rows, summary=summary, outliers=outliers)
