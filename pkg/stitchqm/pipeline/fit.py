"""ABOUTME: Fit stage: wet-day models for every pixel-season of both reference datasets.
ABOUTME: Writes one model store per dataset and season, plus Stitch-BJ replacement summaries."""

import itertools
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from stitchqm.analysis.seasons import Season, extract_sample
from stitchqm.config import DATASETS, RunConfig
from stitchqm.correction.ssr import resolve_threshold
from stitchqm.distributions.fitting import FAMILY_TAGS, FitConfig, FitResult, fit_empirical, fit_family
from stitchqm.distributions.models import SEGMENT_TAGS, EmpiricalModel, StitchModel
from stitchqm.distributions.stitch_bj import (
    STITCH_CANDIDATES,
    RejectionIndices,
    StitchDecision,
    build_stitch,
    pbj_threshold,
    replacement_stats,
)
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.model_store import MODEL_TAGS, FitDiagnostics, ModelRecord, ModelStore, save_models
from stitchqm.ingestion.pixel_csv import read_stack
from stitchqm.pipeline.parallel import map_tasks

logger = logging.getLogger(__name__)

LogFunc = Callable[[str], None]

STITCH_TAG = "stitchbj"


@dataclass(frozen=True)
class PixelFitTask:
    """Everything needed to fit one pixel-season in a worker process."""

    lat_index: int
    lon_index: int
    season: Season
    wet: npt.NDArray[np.float64]
    alpha: float
    n_days: int
    threshold_mm: float
    models: tuple[str, ...]
    fit_config: FitConfig
    bj_level: float
    bj_threshold: npt.NDArray[np.float64] | None = None


@dataclass(frozen=True)
class PixelFitOutcome:
    """Records of one pixel-season and its stitch decision when Stitch-BJ was requested."""

    records: tuple[ModelRecord, ...]
    decision: StitchDecision | None


def _fit_or_fallback(tag: str, task: PixelFitTask) -> tuple[FitResult, bool]:
    """Fit ``tag``; below the minimum sample or on failure fall back to the empirical model."""
    if tag == "emp":
        return fit_empirical(task.wet), False
    if task.wet.size < task.fit_config.min_sample:
        logger.warning(
            "Only %d wet days for %s at pixel (%d, %d) %s (minimum %d); using the empirical model",
            task.wet.size,
            tag,
            task.lat_index,
            task.lon_index,
            task.season,
            task.fit_config.min_sample,
        )
        return fit_empirical(task.wet), True
    try:
        return fit_family(tag, task.wet, task.fit_config), False
    except (ValueError, FloatingPointError) as e:
        logger.warning(
            "Fit %s failed at pixel (%d, %d) %s: %s; using the empirical model",
            tag,
            task.lat_index,
            task.lon_index,
            task.season,
            e,
        )
        return fit_empirical(task.wet), True


def _record(task: PixelFitTask, tag: str, **fields: object) -> ModelRecord:
    return ModelRecord.model_validate(
        {
            "lat_index": task.lat_index,
            "lon_index": task.lon_index,
            "season": task.season.value,
            "tag": tag,
            "alpha": task.alpha,
            "n_days": task.n_days,
            "n_wet": int(task.wet.size),
            "threshold_mm": task.threshold_mm,
            **fields,
        }
    )


def stored_tags(models: Sequence[str]) -> tuple[str, ...]:
    """Tags stored per pixel-season: the requested models plus every candidate Stitch-BJ evaluates."""
    wanted = set(models)
    if STITCH_TAG in wanted:
        wanted |= set(STITCH_CANDIDATES)
    return tuple(tag for tag in MODEL_TAGS if tag in wanted)


def fit_pixel(task: PixelFitTask) -> PixelFitOutcome:
    """Fit every requested model of one pixel-season, storing the Stitch-BJ candidates as well."""
    tags = stored_tags(task.models)
    if task.wet.size == 0:
        logger.warning("No wet day at pixel (%d, %d) %s", task.lat_index, task.lon_index, task.season)
        records = tuple(_record(task, tag, model=None, fallback=True, empty_sample=True) for tag in tags)
        return PixelFitOutcome(records=records, decision=None)

    fits = {tag: _fit_or_fallback(tag, task) for tag in FAMILY_TAGS if tag in tags}

    records: list[ModelRecord] = []
    for tag, (result, fallback) in fits.items():
        diagnostics = FitDiagnostics(
            neg_log_lik=result.neg_log_lik, converged=result.converged, iterations=result.iterations
        )
        label = SEGMENT_TAGS[result.model.family]
        records.append(
            _record(task, tag, model=result.model, label=label, fit=diagnostics, fallback=fallback)
        )

    decision: StitchDecision | None = None
    if STITCH_TAG in task.models:
        # Stitching needs genuine EGP and ExpW fits.
        fallback = any(fits[tag][1] for tag in ("egp", "expw"))
        if fallback:
            empirical = fits["emp"][0].model
            if not isinstance(empirical, EmpiricalModel):
                raise TypeError("the emp fit must hold an empirical model")
            decision = StitchDecision(
                chosen=StitchModel.assemble(empirical),
                candidates_considered=(),
                indices=RejectionIndices(None, None),
                n=int(task.wet.size),
            )
        else:
            decision = build_stitch(
                task.wet, {tag: fit for tag, (fit, _) in fits.items()}, task.bj_level, task.bj_threshold
            )
        records.append(
            _record(
                task,
                STITCH_TAG,
                model=decision.chosen,
                label=decision.label,
                i_l=decision.indices.i_l,
                i_u=decision.indices.i_u,
                fallback=fallback,
            )
        )
    return PixelFitOutcome(records=tuple(records), decision=decision)


def build_fit_tasks(
    stack: GridStack, season: Season, threshold_mm: float, cfg: RunConfig, fit_config: FitConfig
) -> list[PixelFitTask]:
    """One task per pixel of ``stack`` for ``season``, in row-major pixel order.

    With Stitch-BJ requested the rejection thresholds are computed here, once per sample size large
    enough to fit, and shipped with each task.
    """
    stitch = STITCH_TAG in cfg.models
    tasks = []
    for i, j in itertools.product(range(stack.n_lat), range(stack.n_lon)):
        sample = extract_sample(stack, i, j, season, threshold_mm)
        bj_threshold: npt.NDArray[np.float64] | None = None
        if stitch and sample.wet.size >= max(fit_config.min_sample, 1):
            bj_threshold = pbj_threshold(sample.wet.size, cfg.bj_level)
        tasks.append(
            PixelFitTask(
                lat_index=i,
                lon_index=j,
                season=season,
                wet=sample.wet,
                alpha=sample.alpha,
                n_days=sample.n_days,
                threshold_mm=threshold_mm,
                models=tuple(cfg.models),
                fit_config=fit_config,
                bj_level=cfg.bj_level,
                bj_threshold=bj_threshold,
            )
        )
    return tasks


def load_reference_stacks(cfg: RunConfig) -> dict[str, GridStack]:
    """Observation and model reference stacks, checked to share one grid."""
    stacks = {"obs": read_stack(cfg.obs_path), "mod": read_stack(cfg.mod_ref_path)}
    stacks["obs"].require_same_grid(stacks["mod"])
    return stacks


def run_fit(cfg: RunConfig, verbose_callback: LogFunc | None = None) -> list[Path]:
    """Fit all requested models for both reference datasets.

    Args:
        cfg: Run configuration.
        verbose_callback: Optional callback for progress messages.

    Returns:
        Paths of the written model stores and replacement summaries.
    """
    log = verbose_callback or (lambda _msg: None)
    stacks = load_reference_stacks(cfg)
    threshold = resolve_threshold(cfg.ssr_config(), stacks["obs"].values, stacks["mod"].values)
    fit_config = cfg.fit_config().model_copy(update={"shift": threshold})
    log(f"Wet-day threshold: {threshold:g} mm")

    written: list[Path] = []
    for dataset in DATASETS:
        stack = stacks[dataset]
        decisions: dict[str, list[StitchDecision]] = {}
        for season in cfg.seasons:
            log(f"Fitting {dataset} {season} ({stack.n_lat}x{stack.n_lon} pixels)...")
            tasks = build_fit_tasks(stack, season, threshold, cfg, fit_config)
            outcomes = map_tasks(fit_pixel, tasks, cfg.n_workers)
            store = ModelStore.from_records(record for outcome in outcomes for record in outcome.records)
            written.append(save_models(store, cfg.store_path(dataset, season)))
            decisions[season.value] = [o.decision for o in outcomes if o.decision is not None]
            log(f"  -> {len(store)} records")

        if STITCH_TAG in cfg.models and any(decisions.values()):
            labels, fractions = replacement_stats({s: d for s, d in decisions.items() if d})
            labels_path = cfg.output_dir / f"replacement_{dataset}.csv"
            fractions_path = cfg.output_dir / f"replacement_fractions_{dataset}.csv"
            labels.write_csv(labels_path)
            fractions.write_csv(fractions_path)
            written.extend([labels_path, fractions_path])
            log(f"  -> {labels_path}")
    return written
