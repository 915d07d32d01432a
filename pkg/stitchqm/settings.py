"""ABOUTME: Configuration logic and path settings for the project.
ABOUTME: Provides paths for configs and outputs plus process-wide numerical knobs."""

from pathlib import Path

from pydantic import computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict

from stitchqm import __version__


def _get_project_root() -> Path:
    """Find project root by looking for pyproject.toml."""
    current = Path(__file__).resolve().parent
    while current != current.parent:
        if (current / "pyproject.toml").exists():
            return current
        current = current.parent
    return Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """Contains settings for this project.

    Every field can be overridden from the environment with the ``STITCHQM_`` prefix,
    e.g. ``STITCHQM_BJ_CALIBRATION_REPLICATES=500``.
    """

    model_config = SettingsConfigDict(env_prefix="STITCHQM_")

    VERSION: str = __version__
    """Project version."""

    PROJECT_ROOT: Path = _get_project_root()
    """Root directory of the project."""

    bj_calibration_replicates: int = 2000
    """Monte-Carlo replicates used to calibrate the per-index Berk-Jones thresholds."""

    bj_calibration_seed: int = 20_251_017
    """Base seed of the calibration streams; mixed with (n, level) so every cache entry is reproducible."""

    min_wet_days: int = 20
    """Minimum wet-day count for a parametric fit; smaller samples fall back to the empirical model."""

    @computed_field  # type: ignore[prop-decorator]
    @property
    def configs_dir(self) -> Path:
        """Directory containing configuration files."""
        return self.PROJECT_ROOT / "configs"

    @computed_field  # type: ignore[prop-decorator]
    @property
    def logging_config_path(self) -> Path:
        """Path to the logging.yml configuration file."""
        return self.configs_dir / "logging.yml"

    @computed_field  # type: ignore[prop-decorator]
    @property
    def diagnostic_schema_path(self) -> Path:
        """Path to the JSON schema describing `diagnose` output."""
        return self.configs_dir / "diagnostic.schema.json"

    @computed_field  # type: ignore[prop-decorator]
    @property
    def default_output_dir(self) -> Path:
        """Fallback output directory when a run config does not name one."""
        return self.PROJECT_ROOT / "data" / "runs"


settings = Settings()
