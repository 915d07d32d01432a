"""Contains configurations for the test run."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pytest

from stitchqm.config import RunConfig, build_run_config
from stitchqm.distributions.models import DistModel, quantile
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import write_gsf

StackFactory = Callable[..., GridStack]


@pytest.fixture
def plotting_sample() -> Callable[[DistModel, int], npt.NDArray[np.float64]]:
    """Sample sitting exactly on the ``(i - 0.5) / n`` quantiles of a model."""

    def sampler(model: DistModel, n: int) -> npt.NDArray[np.float64]:
        positions = (np.arange(1, n + 1) - 0.5) / n
        return np.asarray(quantile(model, positions), dtype=np.float64)

    return sampler


@pytest.fixture
def make_stack() -> StackFactory:
    """Factory for daily stacks starting on ``start`` with 1-degree coordinates."""

    def factory(values: npt.ArrayLike, start: str = "2000-01-01") -> GridStack:
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1, 1)
        dates = np.datetime64(start, "D") + np.arange(arr.shape[0]).astype("timedelta64[D]")
        return GridStack(
            lats=40.0 + np.arange(arr.shape[1], dtype=np.float64),
            lons=5.0 + np.arange(arr.shape[2], dtype=np.float64),
            dates=dates,
            values=arr,
        )

    return factory


def synthetic_values(
    rng: np.random.Generator, n_days: int, n_lat: int, n_lon: int, scale: float, dry: float
) -> npt.NDArray[np.float64]:
    """Daily precipitation: dry days 0 with probability ``dry``, wet days 1 + Exp(scale)."""
    wet = 1.0 + rng.exponential(scale, size=(n_days, n_lat, n_lon))
    return np.where(rng.random((n_days, n_lat, n_lon)) < dry, 0.0, wet)


@pytest.fixture
def run_config(tmp_path: Path, make_stack: StackFactory) -> RunConfig:
    """Small 2x2 run over three reference years and one future year, JJA only."""
    rng = np.random.default_rng(7)
    ref_days, fut_days = 3 * 365 + 1, 365
    obs = synthetic_values(rng, ref_days, 2, 2, scale=2.0, dry=0.5)
    mod = synthetic_values(rng, ref_days, 2, 2, scale=3.0, dry=0.4)
    fut = synthetic_values(rng, fut_days, 2, 2, scale=3.0, dry=0.4)
    val = synthetic_values(rng, fut_days, 2, 2, scale=2.0, dry=0.5)
    obs[:, 1, 1] = 0.0
    mod[:, 1, 1] = 0.0

    data = tmp_path / "data"
    paths = {
        "obs_path": write_gsf(make_stack(obs), data / "obs_ref.gsf"),
        "mod_ref_path": write_gsf(make_stack(mod), data / "mod_ref.gsf"),
        "mod_fut_path": write_gsf(make_stack(fut, start="2003-01-01"), data / "mod_fut.gsf"),
        "obs_val_path": write_gsf(make_stack(val, start="2003-01-01"), data / "obs_val.gsf"),
    }
    return build_run_config(
        {
            **paths,
            "seasons": "JJA",
            "models": "gamma,emp",
            "output_dir": tmp_path / "out",
            "n_workers": 1,
            "fit_restarts": 0,
        }
    )
