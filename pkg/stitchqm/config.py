"""ABOUTME: Run configuration for the correction pipeline.
ABOUTME: Parses flat key = value files, applies command-line overrides and validates with pydantic."""

import os
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from stitchqm.analysis.metrics import QuantileGrid
from stitchqm.analysis.seasons import Season
from stitchqm.correction.ssr import SSRConfig, ThresholdMode
from stitchqm.distributions.fitting import FitConfig
from stitchqm.exceptions import ConfigError
from stitchqm.ingestion.model_store import MODEL_TAGS, ModelTag
from stitchqm.settings import settings

DATASETS = ("obs", "mod")


def _default_workers() -> int:
    return os.cpu_count() or 1


class RunConfig(BaseModel):
    """All settings of one pipeline run. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    obs_path: Path = Field(description="Observation reference stack (GSF)")
    mod_ref_path: Path = Field(description="Model reference stack (GSF)")
    mod_fut_path: Path = Field(description="Model future stack to correct (GSF)")
    obs_val_path: Path | None = Field(default=None, description="Observation validation stack used by evaluate")
    seasons: list[Season] = Field(default_factory=lambda: list(Season), min_length=1, description="Seasons to process")
    models: list[ModelTag] = Field(
        default_factory=lambda: list(MODEL_TAGS), min_length=1, description="Wet-day models to fit and apply"
    )
    wet_threshold_mm: float = Field(default=1.0, gt=0, description="Wet-day threshold and parametric shift (mm)")
    egp_censor_mm: float = Field(default=3.0, ge=0, description="EGP left-censoring level (mm)")
    bj_level: float = Field(default=0.05, gt=0, lt=1, description="Family-wise level of the Berk-Jones test")
    n_quantiles: int = Field(default=50, ge=20, description="Quantiles used by the evaluation metrics")
    seed: int = Field(default=0, description="Seed of the SSR jitter and optimizer restarts")
    output_dir: Path = Field(default_factory=lambda: settings.default_output_dir, description="Output directory")
    ssr_mode: ThresholdMode = Field(default="common_threshold", description="common_threshold or dataset_minimum")
    n_workers: int = Field(default_factory=_default_workers, ge=1, description="Worker processes")
    baseline_model: ModelTag = Field(default="stitchbj", description="Reference model of the difference metrics")
    fit_max_iterations: int = Field(default=2000, gt=0, description="Optimizer iteration limit")
    fit_tolerance: float = Field(default=1e-9, gt=0, description="Optimizer simplex tolerance")
    fit_restarts: int = Field(default=3, ge=0, description="Jittered optimizer restarts")
    evaluate_uncorrected: bool = Field(default=False, description="Also evaluate the raw future series as 'raw'")

    @field_validator("seasons", "models", mode="before")
    @classmethod
    def _split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    def fit_config(self) -> FitConfig:
        """Optimizer settings for the maximum-likelihood fits."""
        return FitConfig(
            max_iterations=self.fit_max_iterations,
            tolerance=self.fit_tolerance,
            restarts=self.fit_restarts,
            censor_mm=self.egp_censor_mm,
            shift=self.wet_threshold_mm,
            min_sample=settings.min_wet_days,
            seed=self.seed,
        )

    def ssr_config(self) -> SSRConfig:
        """SSR settings."""
        return SSRConfig(threshold_mm=self.wet_threshold_mm, seed=self.seed, mode=self.ssr_mode)

    def quantile_grid(self) -> QuantileGrid:
        """Quantile grid of the evaluation metrics."""
        return QuantileGrid(n_quantiles=self.n_quantiles)

    def store_path(self, dataset: str, season: Season | str) -> Path:
        """Model store file of one dataset and season."""
        return self.output_dir / "models" / f"{dataset}_{Season(season)}.jsonl"

    def corrected_path(self, model: str) -> Path:
        """Corrected future stack produced with ``model``."""
        return self.output_dir / "corrected" / f"{model}.gsf"


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Raises:
        ConfigError: On a line without ``=``, an empty key or a repeated key.
    """
    values: dict[str, str] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {line_number}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"line {line_number}: key '{key}' given twice")
        values[key] = value.strip()
    return values


def parse_overrides(overrides: Sequence[str]) -> dict[str, str]:
    """Turn ``KEY=VALUE`` strings into a mapping; later ones win.

    Raises:
        ConfigError: If an override lacks ``=``.
    """
    values: dict[str, str] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override must be KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    return values


def build_run_config(values: Mapping[str, Any]) -> RunConfig:
    """Validate raw values into a RunConfig.

    Raises:
        ConfigError: Listing every unknown key or invalid value.
    """
    cleaned = {key: value for key, value in values.items() if value != ""}
    try:
        return RunConfig.model_validate(cleaned)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid run configuration: {problems}") from e


def load_run_config(path: Path | None, overrides: Sequence[str] = ()) -> RunConfig:
    """Load a run configuration; overrides take precedence over the file, the file over defaults.

    Raises:
        FileNotFoundError: If ``path`` is given but missing.
        ConfigError: If the file or overrides are invalid.
    """
    values: dict[str, str] = {}
    if path is not None:
        if not path.exists():
            raise FileNotFoundError(f"Run config not found: {path}")
        values.update(parse_config_text(path.read_text(encoding="utf-8")))
    values.update(parse_overrides(overrides))
    return build_run_config(values)


def config_keys_help() -> str:
    """One line per config key with its description and default, for command help."""
    factory_defaults = {"output_dir": "data/runs", "n_workers": "available processors"}
    lines = ["Config keys (file 'key = value' or --set key=value):"]
    for name, info in RunConfig.model_fields.items():
        if info.is_required():
            default = "required"
        elif info.default_factory is not None:
            default = f"default {factory_defaults.get(name, 'all')}"
        else:
            default = f"default {info.default}"
        lines.append(f"{name}: {info.description} ({default})")
    return "\n\n".join(lines)
