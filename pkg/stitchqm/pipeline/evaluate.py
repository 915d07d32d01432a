"""ABOUTME: Evaluate stage: quantile metrics of every corrected stack against the validation target.
ABOUTME: Writes per-pixel metrics, baseline differences and boxplot summaries as CSV/JSON."""

import itertools
import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np
import polars as pl

from stitchqm.analysis.metrics import (
    METRIC_COLUMNS,
    QuantileGrid,
    aggregate_report,
    compute_pixel_metrics,
    difference_table,
)
from stitchqm.analysis.seasons import Season, season_mask
from stitchqm.config import RunConfig
from stitchqm.exceptions import ConfigError, InsufficientSampleError
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.model_store import load_models
from stitchqm.ingestion.pixel_csv import read_stack

logger = logging.getLogger(__name__)

LogFunc = Callable[[str], None]

RAW_MODEL = "raw"


def evaluation_rows(
    target: GridStack,
    candidates: dict[str, GridStack],
    seasons: list[Season],
    threshold_mm: float,
    grid: QuantileGrid,
) -> pl.DataFrame:
    """One metrics row per (pixel, season, model); pixels without valid days give NaN metrics."""
    rows: list[dict[str, object]] = []
    for season in seasons:
        target_mask = season_mask(target.dates, season)
        masks = {name: season_mask(stack.dates, season) for name, stack in candidates.items()}
        for i, j in itertools.product(range(target.n_lat), range(target.n_lon)):
            target_series = target.values[target_mask, i, j].astype(np.float64)
            for name, stack in candidates.items():
                series = stack.values[masks[name], i, j].astype(np.float64)
                row: dict[str, object] = {
                    "lat": float(target.lats[i]),
                    "lon": float(target.lons[j]),
                    "season": season.value,
                    "model": name,
                }
                try:
                    metrics = compute_pixel_metrics(series, target_series, threshold_mm, grid)
                    row.update({column: getattr(metrics, column) for column in METRIC_COLUMNS})
                except InsufficientSampleError:
                    row.update(dict.fromkeys(METRIC_COLUMNS, np.nan))
                rows.append(row)
    schema: dict[str, pl.DataType | type[pl.DataType]] = {
        "lat": pl.Float64,
        "lon": pl.Float64,
        "season": pl.Utf8,
        "model": pl.Utf8,
    }
    schema.update(dict.fromkeys(METRIC_COLUMNS, pl.Float64))
    return pl.DataFrame(rows, schema=schema)


def _run_threshold(cfg: RunConfig) -> float:
    """Threshold the fits used, read back from the first observation store record."""
    for season in cfg.seasons:
        path = cfg.store_path("obs", season)
        if path.exists():
            for record in load_models(path):
                return record.threshold_mm
    return cfg.wet_threshold_mm


def run_evaluate(cfg: RunConfig, verbose_callback: LogFunc | None = None) -> list[Path]:
    """Compute metrics of every corrected stack against the observation validation stack.

    Args:
        cfg: Run configuration; ``obs_val_path`` is required.
        verbose_callback: Optional callback for progress messages.

    Returns:
        Paths of the written report files.

    Raises:
        ConfigError: If ``obs_val_path`` is not set.
    """
    log = verbose_callback or (lambda _msg: None)
    if cfg.obs_val_path is None:
        raise ConfigError("evaluate needs obs_val_path")
    target = read_stack(cfg.obs_val_path)

    candidates = {tag: read_stack(cfg.corrected_path(tag)) for tag in cfg.models}
    if cfg.evaluate_uncorrected:
        candidates[RAW_MODEL] = read_stack(cfg.mod_fut_path)
    for stack in candidates.values():
        target.require_same_grid(stack)

    threshold = _run_threshold(cfg)
    log(f"Evaluating {len(candidates)} models on {target.n_lat}x{target.n_lon} pixels...")
    rows = evaluation_rows(target, candidates, list(cfg.seasons), threshold, cfg.quantile_grid())
    report = aggregate_report(rows)

    out_dir = cfg.output_dir / "evaluation"
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "metrics.csv": report.rows,
        "summary.csv": report.summary,
        "outliers.csv": report.outliers,
    }
    if cfg.baseline_model in candidates:
        outputs["differences.csv"] = difference_table(rows, cfg.baseline_model)
    else:
        logger.warning("Baseline model %s was not evaluated; skipping differences", cfg.baseline_model)

    written: list[Path] = []
    for name, frame in outputs.items():
        path = out_dir / name
        frame.write_csv(path)
        written.append(path)
    json_path = out_dir / "metrics.json"
    report.rows.write_json(json_path)
    written.append(json_path)
    log(f"  -> {out_dir} ({len(rows)} rows)")
    return written
