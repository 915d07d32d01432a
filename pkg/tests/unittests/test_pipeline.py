# ABOUTME: Tests for the fit, correct, evaluate and stationarity stages on a small synthetic run.
# ABOUTME: Uses the run_config fixture: a 2x2 grid with one all-dry pixel, JJA only, gamma and emp models.

import logging
from collections.abc import Callable

import numpy as np
import numpy.typing as npt
import polars as pl
import pytest

from stitchqm.analysis.seasons import Season
from stitchqm.config import RunConfig
from stitchqm.distributions.fitting import FitConfig
from stitchqm.distributions.models import STITCH_LABELS, EGPParams, EmpiricalModel, GammaParams, sample
from stitchqm.distributions.stitch_bj import pbj_threshold
from stitchqm.exceptions import ConfigError, DimensionMismatchError, MissingModelError
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import read_gsf, write_gsf
from stitchqm.ingestion.model_store import load_models
from stitchqm.ingestion.pixel_csv import read_stack
from stitchqm.pipeline import run_correct, run_evaluate, run_fit, run_stationarity
from stitchqm.pipeline.correct import correct_stack, load_season_stores
from stitchqm.pipeline.fit import PixelFitTask, build_fit_tasks, fit_pixel


class TestRunFit:
    """Tests for run_fit."""

    def test_records_per_pixel(self, run_config: RunConfig) -> None:
        """Every pixel gets one record per model in both datasets."""
        written = run_fit(run_config)

        assert sorted(p.name for p in written) == ["mod_JJA.jsonl", "obs_JJA.jsonl"]
        for path in written:
            assert len(load_models(path)) == 2 * 2 * 2

    def test_gamma_fit_reasonable(self, run_config: RunConfig) -> None:
        """Wet days 1 + Exp(2) give a Gamma shape near 1 and scale near 2."""
        run_fit(run_config)
        record = load_models(run_config.store_path("obs", "JJA")).get(0, 0, "JJA", "gamma")

        assert isinstance(record.model, GammaParams)
        assert record.model.k == pytest.approx(1.0, abs=0.35)
        assert record.model.theta == pytest.approx(2.0, rel=0.4)
        assert record.alpha == pytest.approx(0.5, abs=0.1)
        assert not record.fallback

    def test_all_dry_pixel(self, run_config: RunConfig) -> None:
        """A pixel without wet days stores no model and flags the empty sample."""
        run_fit(run_config)
        store = load_models(run_config.store_path("obs", "JJA"))

        for tag in ("gamma", "emp"):
            record = store.get(1, 1, "JJA", tag)
            assert record.model is None
            assert record.empty_sample
            assert record.alpha == 1.0

    def test_empirical_record(self, run_config: RunConfig) -> None:
        """The emp record keeps the sorted wet sample."""
        run_fit(run_config)
        record = load_models(run_config.store_path("mod", "JJA")).get(0, 1, "JJA", "emp")

        assert isinstance(record.model, EmpiricalModel)
        assert record.model.n == record.n_wet
        assert min(record.model.sorted_sample) > run_config.wet_threshold_mm

    def test_deterministic(self, run_config: RunConfig) -> None:
        """Rerunning gives byte-identical stores."""
        first = [p.read_bytes() for p in run_fit(run_config)]
        second = [p.read_bytes() for p in run_fit(run_config)]

        assert first == second

    def test_worker_count_irrelevant(self, run_config: RunConfig) -> None:
        """Two workers give the same stores as one."""
        serial = [p.read_bytes() for p in run_fit(run_config)]
        parallel = [p.read_bytes() for p in run_fit(run_config.model_copy(update={"n_workers": 2}))]

        assert serial == parallel

    def test_stitch_alone_stores_candidates(self, run_config: RunConfig) -> None:
        """Requesting only Stitch-BJ also stores the EGP, ExpW and empirical fits it chose from."""
        written = run_fit(run_config.model_copy(update={"models": ["stitchbj"]}))
        store = load_models(next(p for p in written if p.name == "obs_JJA.jsonl"))

        assert len(store) == 4 * 2 * 2
        for tag in ("egp", "expw", "emp"):
            assert store.get(0, 0, "JJA", tag).model is not None
            assert store.get(1, 1, "JJA", tag).empty_sample
        assert store.get(0, 0, "JJA", "stitchbj").label in STITCH_LABELS


class TestFitPixel:
    """Tests for fit_pixel and build_fit_tasks."""

    truth = EGPParams(sigma=3.0, xi=0.1, kappa=1.0, shift=1.0)

    def _task(
        self,
        wet: npt.NDArray[np.float64],
        models: tuple[str, ...],
        bj_threshold: npt.NDArray[np.float64] | None = None,
    ) -> PixelFitTask:
        return PixelFitTask(
            lat_index=2,
            lon_index=3,
            season=Season.JJA,
            wet=np.sort(wet),
            alpha=0.5,
            n_days=2 * wet.size,
            threshold_mm=1.0,
            models=models,
            fit_config=FitConfig(restarts=0, min_sample=20),
            bj_level=0.05,
            bj_threshold=bj_threshold,
        )

    def test_small_sample_fallback_logged(self, caplog: pytest.LogCaptureFixture) -> None:
        """Too few wet days fall back to the empirical model with a warning naming the pixel."""
        task = self._task(np.array([1.5, 2.0, 3.0, 4.5, 7.0]), ("gamma",))

        with caplog.at_level(logging.WARNING, logger="stitchqm.pipeline.fit"):
            outcome = fit_pixel(task)

        (record,) = outcome.records
        assert record.fallback
        assert isinstance(record.model, EmpiricalModel)
        (message,) = [r.getMessage() for r in caplog.records if r.levelno == logging.WARNING]
        assert "Only 5 wet days for gamma at pixel (2, 3) JJA (minimum 20)" in message

    def test_shipped_thresholds_used(self) -> None:
        """Stitch-BJ tests against the thresholds carried by the task."""
        wet = sample(self.truth, 150, seed=4)
        task = self._task(wet, ("stitchbj",), bj_threshold=np.zeros(wet.size))

        outcome = fit_pixel(task)

        assert outcome.decision is not None
        assert outcome.decision.label == "EGP"
        assert [r.tag for r in outcome.records] == ["expw", "egp", "emp", "stitchbj"]

    def test_thresholds_computed_before_dispatch(self, run_config: RunConfig) -> None:
        """Tasks carry the memoized thresholds of their sample size; the all-dry pixel carries none."""
        cfg = run_config.model_copy(update={"models": ["stitchbj"]})
        stack = read_stack(cfg.obs_path)

        tasks = build_fit_tasks(stack, Season.JJA, cfg.wet_threshold_mm, cfg, cfg.fit_config())

        for task in tasks:
            if task.wet.size == 0:
                assert task.bj_threshold is None
            else:
                assert task.bj_threshold is pbj_threshold(task.wet.size, cfg.bj_level)



class TestRunCorrect:
    """Tests for run_correct and correct_stack."""

    def test_output_matches_future_layout(self, run_config: RunConfig) -> None:
        """One corrected stack per model with the dates and grid of the future stack."""
        run_fit(run_config)
        written = run_correct(run_config)
        future = read_gsf(run_config.mod_fut_path)

        assert [p.stem for p in written] == ["gamma", "emp"]
        for path in written:
            corrected = read_gsf(path)
            np.testing.assert_array_equal(corrected.dates, future.dates)
            assert corrected.values.shape == future.values.shape

    def test_other_seasons_missing(self, run_config: RunConfig) -> None:
        """Only JJA is configured, so the other days are NaN and JJA days are not."""
        run_fit(run_config)
        corrected = read_gsf(run_correct(run_config)[0])
        months = corrected.dates.astype("datetime64[M]").astype(int) % 12 + 1
        jja = np.isin(months, (6, 7, 8))

        assert np.isnan(corrected.values[~jja]).all()
        assert not np.isnan(corrected.values[jja]).any()

    def test_all_dry_reference_gives_dry_output(self, run_config: RunConfig) -> None:
        """A pixel never wet in the observations stays dry after correction."""
        run_fit(run_config)
        corrected = read_gsf(run_correct(run_config)[0])
        months = corrected.dates.astype("datetime64[M]").astype(int) % 12 + 1

        assert np.all(corrected.values[np.isin(months, (6, 7, 8)), 1, 1] == 0.0)

    def test_identity_transfer(self, run_config: RunConfig) -> None:
        """Correcting with obs stores on both sides keeps wet days unchanged."""
        run_fit(run_config)
        stores = load_season_stores(run_config)
        for season_stores in stores.values():
            season_stores["mod"] = season_stores["obs"]
        future = read_gsf(run_config.mod_fut_path)

        corrected = correct_stack(future, stores, "gamma", run_config.ssr_config())

        months = future.dates.astype("datetime64[M]").astype(int) % 12 + 1
        jja = np.isin(months, (6, 7, 8))
        original = future.values[jja, 0, 0].astype(np.float64)
        mapped = corrected.values[jja, 0, 0].astype(np.float64)
        wet = original > run_config.wet_threshold_mm
        np.testing.assert_allclose(mapped[wet], original[wet], rtol=1e-5)
        assert np.all(mapped[original < run_config.wet_threshold_mm] == 0.0)

    def test_missing_store_record(self, run_config: RunConfig) -> None:
        """A model that was never fitted is reported by pixel-season."""
        run_fit(run_config)

        with pytest.raises(MissingModelError, match="pixel"):
            run_correct(run_config.model_copy(update={"models": ["egp"]}))

    @pytest.mark.parametrize(
        "moved",
        [
            lambda stack: GridStack(stack.lats + 30.0, stack.lons + 100.0, stack.dates, stack.values),
            lambda stack: GridStack(stack.lats[:1], stack.lons, stack.dates, stack.values[:, :1, :]),
        ],
    )
    def test_future_on_other_grid(self, run_config: RunConfig, moved: Callable[[GridStack], GridStack]) -> None:
        """A future stack on shifted or cropped coordinates is refused."""
        run_fit(run_config)
        write_gsf(moved(read_gsf(run_config.mod_fut_path)), run_config.mod_fut_path)

        with pytest.raises(DimensionMismatchError):
            run_correct(run_config)
        assert not run_config.corrected_path("gamma").exists()

    def test_missing_store_file(self, run_config: RunConfig) -> None:
        """Correcting before fitting is an I/O error."""
        with pytest.raises(FileNotFoundError):
            run_correct(run_config)


class TestRunEvaluate:
    """Tests for run_evaluate."""

    def test_row_count(self, run_config: RunConfig) -> None:
        """One row per pixel, season and model."""
        run_fit(run_config)
        run_correct(run_config)
        written = run_evaluate(run_config)

        metrics = pl.read_csv(next(p for p in written if p.name == "metrics.csv"))
        assert metrics.height == 4 * 1 * 2
        assert set(metrics["model"].to_list()) == {"gamma", "emp"}

    def test_target_scores_zero(self, run_config: RunConfig) -> None:
        """A corrected stack equal to the target has zero errors."""
        run_fit(run_config)
        run_correct(run_config)
        write_gsf(read_gsf(run_config.obs_val_path), run_config.corrected_path("emp"))
        written = run_evaluate(run_config.model_copy(update={"baseline_model": "emp"}))

        metrics = pl.read_csv(next(p for p in written if p.name == "metrics.csv"))
        emp = metrics.filter((pl.col("model") == "emp") & pl.col("mae").is_not_nan())
        assert emp.height == 4
        assert emp["mae"].to_list() == [0.0] * 4
        assert emp["dry_prob_diff"].to_list() == [0.0] * 4
        differences = pl.read_csv(next(p for p in written if p.name == "differences.csv"))
        assert (differences.filter(pl.col("mae_diff").is_not_nan())["mae_diff"] <= 0.0).all()

    def test_uncorrected_added(self, run_config: RunConfig) -> None:
        """evaluate_uncorrected scores the raw future stack as 'raw'."""
        run_fit(run_config)
        run_correct(run_config)
        written = run_evaluate(run_config.model_copy(update={"evaluate_uncorrected": True}))

        metrics = pl.read_csv(next(p for p in written if p.name == "metrics.csv"))
        assert "raw" in metrics["model"].to_list()

    def test_requires_validation_stack(self, run_config: RunConfig) -> None:
        """Without obs_val_path evaluate is a configuration error."""
        with pytest.raises(ConfigError, match="obs_val_path"):
            run_evaluate(run_config.model_copy(update={"obs_val_path": None}))


class TestRunStationarity:
    """Tests for run_stationarity."""

    def test_outputs(self, run_config: RunConfig) -> None:
        """Seasonal and JJA monthly matrices for obs, mod and combined."""
        written = run_stationarity(run_config)

        names = sorted(p.name for p in written)
        assert names == sorted(
            f"{stem}_{suffix}.csv" for stem in ("seasons", "months_JJA") for suffix in ("obs", "mod", "combined")
        )

    def test_stationary_data_rarely_rejected(self, run_config: RunConfig) -> None:
        """i.i.d. synthetic days reject seasonal equality at about the test level."""
        written = run_stationarity(run_config)

        frame = pl.read_csv(next(p for p in written if p.name == "seasons_obs.csv"))
        cells = frame.drop("group").to_numpy().ravel()
        cells = cells[~np.isnan(cells.astype(np.float64))]
        assert np.all(cells <= 2 / 3)
