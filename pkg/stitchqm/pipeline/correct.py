"""ABOUTME: Correct stage: SSR quantile mapping of the future model stack, per model and season.
ABOUTME: Seasons are corrected separately and reassembled into a full corrected stack per model."""

import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from stitchqm.analysis.seasons import Season, season_mask
from stitchqm.config import DATASETS, RunConfig
from stitchqm.correction.ssr import SSRConfig, TransferFunction, build_transfer, quantile_map
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import write_gsf
from stitchqm.ingestion.model_store import ModelStore, load_models
from stitchqm.ingestion.pixel_csv import read_stack
from stitchqm.pipeline.parallel import map_tasks

logger = logging.getLogger(__name__)

LogFunc = Callable[[str], None]


@dataclass(frozen=True)
class PixelCorrectTask:
    """Future series of one pixel-season with its transfer function."""

    series: npt.NDArray[np.float64]
    transfer: TransferFunction
    ssr: SSRConfig
    stream_key: tuple[int, int, int]


def correct_pixel(task: PixelCorrectTask) -> npt.NDArray[np.float64]:
    """Jitter and map one pixel-season series."""
    return quantile_map(task.transfer, task.series, task.ssr, task.stream_key)


def transfer_for(
    stores: dict[str, ModelStore], lat_index: int, lon_index: int, season: Season, tag: str
) -> TransferFunction:
    """Transfer function of one pixel-season from the obs and mod reference stores.

    Raises:
        MissingModelError: If either store lacks the pixel-season.
    """
    obs = stores["obs"].get(lat_index, lon_index, season.value, tag)
    mod = stores["mod"].get(lat_index, lon_index, season.value, tag)
    return build_transfer(
        obs_model=obs.model,
        alpha_obs=obs.alpha,
        obs_wet_count=obs.n_wet,
        mod_model=mod.model,
        alpha_mod=mod.alpha,
        threshold_mm=obs.threshold_mm,
    )


def correct_stack(
    future: GridStack,
    stores_by_season: dict[Season, dict[str, ModelStore]],
    tag: str,
    ssr: SSRConfig,
    n_workers: int = 1,
) -> GridStack:
    """Correct every season present in ``stores_by_season``; days of other seasons are NaN."""
    corrected = np.full(future.values.shape, np.nan, dtype=np.float64)
    for season, stores in stores_by_season.items():
        mask = season_mask(future.dates, season)
        if not mask.any():
            continue
        pixels = list(itertools.product(range(future.n_lat), range(future.n_lon)))
        tasks = [
            PixelCorrectTask(
                series=future.values[mask, i, j].astype(np.float64),
                transfer=transfer_for(stores, i, j, season, tag),
                ssr=ssr,
                stream_key=(i, j, season.code),
            )
            for i, j in pixels
        ]
        for (i, j), values in zip(pixels, map_tasks(correct_pixel, tasks, n_workers), strict=True):
            corrected[mask, i, j] = values
    return future.with_values(corrected)


def load_season_stores(cfg: RunConfig) -> dict[Season, dict[str, ModelStore]]:
    """Model stores of both reference datasets for every configured season."""
    return {
        season: {dataset: load_models(cfg.store_path(dataset, season)) for dataset in DATASETS}
        for season in cfg.seasons
    }


def run_correct(cfg: RunConfig, verbose_callback: LogFunc | None = None) -> list[Path]:
    """Correct the future model stack with every configured model.

    Args:
        cfg: Run configuration.
        verbose_callback: Optional callback for progress messages.

    Returns:
        Paths of the corrected stacks, one per model.

    Raises:
        DimensionMismatchError: If the future stack is not on the grid the models were fitted on.
    """
    log = verbose_callback or (lambda _msg: None)
    future = read_stack(cfg.mod_fut_path)
    # Store records are indexed by pixel position only, so the grids must agree.
    read_stack(cfg.obs_path).require_same_grid(future)
    stores = load_season_stores(cfg)
    for season_stores in stores.values():
        for dataset, store in season_stores.items():
            if len(store) == 0:
                logger.warning("Model store for %s is empty", dataset)
    skipped = [season.value for season in Season if season not in stores]
    if skipped:
        logger.warning("Seasons %s are not configured; their days stay missing", ", ".join(skipped))

    written: list[Path] = []
    for tag in cfg.models:
        log(f"Correcting with {tag}...")
        corrected = correct_stack(future, stores, tag, cfg.ssr_config(), cfg.n_workers)
        written.append(write_gsf(corrected, cfg.corrected_path(tag)))
        log(f"  -> {written[-1]}")
    return written
