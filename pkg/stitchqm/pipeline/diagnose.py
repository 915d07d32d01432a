"""ABOUTME: Diagnose stage: per-pixel goodness-of-fit evidence for external plotting.
ABOUTME: Emits k_i values, thresholds, rejection flags, rejection indices and QQ pairs per candidate model."""

import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

from stitchqm.analysis.seasons import Season, extract_sample
from stitchqm.config import RunConfig
from stitchqm.distributions.models import DistModel, quantile
from stitchqm.distributions.stitch_bj import bj_pvalues, rejection_indices, upper_tail_error
from stitchqm.ingestion.model_store import ModelRecord, load_models
from stitchqm.pipeline.fit import load_reference_stacks, stored_tags

logger = logging.getLogger(__name__)

LogFunc = Callable[[str], None]

DIAGNOSTIC_VERSION = 1


class CandidateDiagnostic(BaseModel):
    """Goodness-of-fit evidence of one stored model on its training sample."""

    model_config = ConfigDict(extra="forbid")

    tag: str
    label: str | None
    k_values: list[float]
    thresholds: list[float]
    rejected: list[bool]
    i_l: int | None
    i_u: int | None
    qq_theoretical: list[float]
    qq_empirical: list[float]
    upper_tail_error: float


class SeasonDiagnostic(BaseModel):
    """Diagnostics of one pixel-season."""

    model_config = ConfigDict(extra="forbid")

    season: str
    n_days: int
    n_wet: int
    alpha: float
    threshold_mm: float
    chosen_label: str | None
    i_l: int | None
    i_u: int | None
    candidates: list[CandidateDiagnostic]


class DiagnosticReport(BaseModel):
    """Everything needed to redraw a goodness-of-fit figure for one pixel."""

    model_config = ConfigDict(extra="forbid")

    version: int
    dataset: str
    lat_index: int
    lon_index: int
    lat: float
    lon: float
    seasons: list[SeasonDiagnostic]


def candidate_diagnostic(
    tag: str, record: ModelRecord, wet: npt.NDArray[np.float64], level: float
) -> CandidateDiagnostic:
    """Profile, rejection indices and QQ pairs of ``record.model`` on ``wet``."""
    model: DistModel | None = record.model
    if model is None:
        raise ValueError(f"record for {tag} holds no model")
    x = np.sort(wet)
    profile = bj_pvalues(x, model, level)
    indices = rejection_indices(profile)
    positions = np.arange(1, x.size + 1) / (x.size + 1.0)
    return CandidateDiagnostic(
        tag=tag,
        label=record.label,
        k_values=profile.k_values.tolist(),
        thresholds=profile.threshold.tolist(),
        rejected=profile.rejected.tolist(),
        i_l=indices.i_l,
        i_u=indices.i_u,
        qq_theoretical=np.asarray(quantile(model, positions)).tolist(),
        qq_empirical=x.tolist(),
        upper_tail_error=upper_tail_error(x, model),
    )


def diagnose_pixel(cfg: RunConfig, lat_index: int, lon_index: int, dataset: str = "obs") -> DiagnosticReport:
    """Build the diagnostic report of one pixel from the reference stack and stored models.

    Raises:
        PixelOutOfRangeError: If the pixel is not on the grid.
        MissingModelError: If a configured model, or a candidate Stitch-BJ evaluated, is absent
            from the store.
    """
    stack = load_reference_stacks(cfg)[dataset]
    stack.check_pixel(lat_index, lon_index)

    seasons: list[SeasonDiagnostic] = []
    for season in cfg.seasons:
        store = load_models(cfg.store_path(dataset, season))
        records = {tag: store.get(lat_index, lon_index, season.value, tag) for tag in stored_tags(cfg.models)}
        if not records:
            continue
        first = next(iter(records.values()))
        sample = extract_sample(stack, lat_index, lon_index, season, first.threshold_mm)
        candidates = [
            candidate_diagnostic(tag, record, sample.wet, cfg.bj_level)
            for tag, record in records.items()
            if record.model is not None and sample.n_wet > 0
        ]
        stitched = records.get("stitchbj")
        seasons.append(
            SeasonDiagnostic(
                season=season.value,
                n_days=sample.n_days,
                n_wet=sample.n_wet,
                alpha=sample.alpha,
                threshold_mm=first.threshold_mm,
                chosen_label=stitched.label if stitched else None,
                i_l=stitched.i_l if stitched else None,
                i_u=stitched.i_u if stitched else None,
                candidates=candidates,
            )
        )
    return DiagnosticReport(
        version=DIAGNOSTIC_VERSION,
        dataset=dataset,
        lat_index=lat_index,
        lon_index=lon_index,
        lat=float(stack.lats[lat_index]),
        lon=float(stack.lons[lon_index]),
        seasons=seasons,
    )


def run_diagnose(
    cfg: RunConfig,
    lat_index: int,
    lon_index: int,
    dataset: str = "obs",
    verbose_callback: LogFunc | None = None,
) -> Path:
    """Write ``diagnostics/diagnose_<dataset>_<lat>_<lon>.json`` under the output directory."""
    log = verbose_callback or (lambda _msg: None)
    report = diagnose_pixel(cfg, lat_index, lon_index, dataset)
    path = cfg.output_dir / "diagnostics" / f"diagnose_{dataset}_{lat_index}_{lon_index}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    log(f"  -> {path}")
    return path
