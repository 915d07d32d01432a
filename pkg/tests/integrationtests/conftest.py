"""Contains configurations for the integration test run."""

from pathlib import Path

import numpy as np
import numpy.typing as npt
import pytest

from stitchqm.config import RunConfig, build_run_config
from stitchqm.distributions.models import EGPParams, sample
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import write_gsf

OBS_LAW = EGPParams(sigma=3.0, xi=0.15, kappa=1.2, shift=1.0)
MOD_LAW = EGPParams(sigma=4.5, xi=0.25, kappa=1.0, shift=1.0)
OBS_DRY, MOD_DRY = 0.6, 0.5
GRID = 10


def _synthetic_stack(law: EGPParams, dry: float, start: str, stop: str, seed: int) -> GridStack:
    dates = np.arange(np.datetime64(start), np.datetime64(stop), dtype="datetime64[D]")
    shape = (dates.size, GRID, GRID)
    wet: npt.NDArray[np.float64] = sample(law, int(np.prod(shape)), seed=seed).reshape(shape)
    dry_days = np.random.default_rng(seed + 1).random(shape) < dry
    return GridStack(
        lats=40.0 + 0.25 * np.arange(GRID),
        lons=-2.0 + 0.25 * np.arange(GRID),
        dates=dates,
        values=np.where(dry_days, 0.0, wet),
    )


@pytest.fixture(scope="module")
def experiment_config(tmp_path_factory: pytest.TempPathFactory) -> RunConfig:
    """25 reference years and 11 future years on a 10x10 grid, DJF and JJA, all models."""
    root: Path = tmp_path_factory.mktemp("experiment")
    data = root / "data"
    stacks = {
        "obs_path": (_synthetic_stack(OBS_LAW, OBS_DRY, "1985-01-01", "2010-01-01", 1), "obs_ref.gsf"),
        "mod_ref_path": (_synthetic_stack(MOD_LAW, MOD_DRY, "1985-01-01", "2010-01-01", 3), "mod_ref.gsf"),
        "mod_fut_path": (_synthetic_stack(MOD_LAW, MOD_DRY, "2010-01-01", "2021-01-01", 5), "mod_fut.gsf"),
        "obs_val_path": (_synthetic_stack(OBS_LAW, OBS_DRY, "2010-01-01", "2021-01-01", 7), "obs_val.gsf"),
    }
    paths = {key: write_gsf(stack, data / name) for key, (stack, name) in stacks.items()}
    return build_run_config(
        {
            **paths,
            "seasons": "DJF,JJA",
            "models": "gamma,expw,egp,emp,stitchbj",
            "output_dir": root / "out",
            "evaluate_uncorrected": "true",
            "seed": 11,
        }
    )
