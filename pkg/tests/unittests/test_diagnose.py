# ABOUTME: Tests for per-pixel diagnostics and their shipped JSON schema.
# ABOUTME: Stores are written by hand so the stitch outcome of each pixel is known in advance.

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt
import pytest

from stitchqm.config import RunConfig, build_run_config
from stitchqm.distributions.fitting import FitResult, fit_empirical
from stitchqm.distributions.models import DistModel, EGPParams, ExpWParams
from stitchqm.distributions.stitch_bj import build_stitch
from stitchqm.exceptions import MissingModelError, PixelOutOfRangeError
from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import write_gsf
from stitchqm.ingestion.model_store import ModelRecord, ModelStore, save_models
from stitchqm.pipeline.diagnose import DiagnosticReport, diagnose_pixel, run_diagnose
from stitchqm.settings import settings

Sampler = Callable[[DistModel, int], npt.NDArray[np.float64]]
StackFactory = Callable[..., GridStack]

EGP_TRUTH = EGPParams(sigma=4.0, xi=0.1, kappa=1.0, shift=1.0)
EXPW_EXPONENTIAL = ExpWParams(k=1.0, lam=4.0, alpha=1.0, shift=1.0)
JJA_DAYS = 92


def _fit(model: DistModel, n: int) -> FitResult:
    return FitResult(model=model, neg_log_lik=None, converged=True, iterations=0, sample_size=n)


def _records(i: int, j: int, wet: npt.NDArray[np.float64]) -> list[ModelRecord]:
    fits = {"egp": _fit(EGP_TRUTH, wet.size), "expw": _fit(EXPW_EXPONENTIAL, wet.size), "emp": fit_empirical(wet)}
    decision = build_stitch(wet, fits)
    common = {
        "lat_index": i,
        "lon_index": j,
        "season": "JJA",
        "alpha": 0.0,
        "n_days": wet.size,
        "n_wet": wet.size,
        "threshold_mm": 1.0,
    }
    labels = {"egp": "EGP", "expw": "ExpW", "emp": "EMP"}
    return [
        *(
            ModelRecord.model_validate({**common, "tag": tag, "model": fits[tag].model, "label": label})
            for tag, label in labels.items()
        ),
        ModelRecord.model_validate(
            {
                **common,
                "tag": "stitchbj",
                "model": decision.chosen,
                "label": decision.label,
                "i_l": decision.indices.i_l,
                "i_u": decision.indices.i_u,
            }
        ),
    ]



@pytest.fixture
def diagnose_config(tmp_path: Path, make_stack: StackFactory, plotting_sample: Sampler) -> RunConfig:
    """1x2 grid over one JJA: pixel 0 follows the EGP exactly, pixel 1 has an inflated upper tail."""
    clean = plotting_sample(EGP_TRUTH, JJA_DAYS)
    heavy = clean.copy()
    heavy[-10:] = 1.0 + 5.0 * (heavy[-10:] - 1.0)
    values = np.stack([clean, heavy], axis=1)[:, None, :]
    stack = make_stack(values, start="2001-06-01")
    # Stored float32 values are the ones diagnosed, so the records are built from them too.
    stored = stack.values.astype(np.float64)

    data = tmp_path / "data"
    paths = {name: write_gsf(stack, data / f"{name}.gsf") for name in ("obs", "mod", "fut")}
    cfg = build_run_config(
        {
            "obs_path": paths["obs"],
            "mod_ref_path": paths["mod"],
            "mod_fut_path": paths["fut"],
            "seasons": "JJA",
            "models": "egp,stitchbj",
            "output_dir": tmp_path / "out",
        }
    )
    records = [*_records(0, 0, stored[:, 0, 0]), *_records(0, 1, stored[:, 0, 1])]
    save_models(ModelStore.from_records(records), cfg.store_path("obs", "JJA"))
    return cfg


class TestDiagnosePixel:
    """Tests for diagnose_pixel."""

    def test_pure_egp_has_no_rejections(self, diagnose_config: RunConfig) -> None:
        """An exact EGP sample gives a pure EGP choice with no rejection indices."""
        season = diagnose_pixel(diagnose_config, 0, 0).seasons[0]

        assert season.chosen_label == "EGP"
        assert season.i_l is None
        assert season.i_u is None
        egp = next(c for c in season.candidates if c.tag == "egp")
        assert not any(egp.rejected)
        assert egp.i_l is None
        assert egp.i_u is None

    def test_stitched_indices_match_flags(self, diagnose_config: RunConfig) -> None:
        """The stored upper index is the first rejected upper-half index of the EGP profile."""
        season = diagnose_pixel(diagnose_config, 0, 1).seasons[0]

        assert season.chosen_label is not None
        assert season.chosen_label.startswith("EGP-")
        assert season.i_u is not None
        egp = next(c for c in season.candidates if c.tag == "egp")
        assert egp.i_u == season.i_u
        assert egp.rejected[season.i_u - 1]
        assert not any(egp.rejected[JJA_DAYS // 2 : season.i_u - 1])

    def test_report_contents(self, diagnose_config: RunConfig) -> None:
        """QQ pairs, k values and thresholds cover every wet day."""
        report = diagnose_pixel(diagnose_config, 0, 1)

        assert (report.lat, report.lon) == (40.0, 6.0)
        season = report.seasons[0]
        assert season.n_wet == JJA_DAYS
        for candidate in season.candidates:
            assert len(candidate.qq_empirical) == JJA_DAYS
            assert len(candidate.qq_theoretical) == JJA_DAYS
            assert len(candidate.k_values) == len(candidate.thresholds) == JJA_DAYS
            assert candidate.qq_empirical == sorted(candidate.qq_empirical)

    def test_out_of_range(self, diagnose_config: RunConfig) -> None:
        """Off-grid pixels raise."""
        with pytest.raises(PixelOutOfRangeError):
            diagnose_pixel(diagnose_config, 1, 0)

    def test_missing_model(self, diagnose_config: RunConfig) -> None:
        """A configured model absent from the store raises."""
        with pytest.raises(MissingModelError):
            diagnose_pixel(diagnose_config.model_copy(update={"models": ["gamma"]}), 0, 0)

    def test_stitch_alone_reports_candidates(self, diagnose_config: RunConfig) -> None:
        """Configuring only Stitch-BJ still reports the EGP, ExpW and empirical candidates it chose from."""
        cfg = diagnose_config.model_copy(update={"models": ["stitchbj"]})
        season = diagnose_pixel(cfg, 0, 1).seasons[0]

        assert [c.tag for c in season.candidates] == ["expw", "egp", "emp", "stitchbj"]
        assert season.chosen_label == "EGP-EMP"



class TestDiagnosticSchema:
    """Tests for the shipped diagnostic schema."""

    @staticmethod
    def _shipped() -> dict[str, Any]:
        return json.loads(settings.diagnostic_schema_path.read_text(encoding="utf-8"))

    def test_schema_matches_model(self) -> None:
        """Property names and required lists agree with the report model."""
        shipped = self._shipped()
        generated = DiagnosticReport.model_json_schema()

        assert set(shipped["properties"]) == set(generated["properties"])
        assert set(shipped["required"]) == set(generated["required"])
        for name in ("SeasonDiagnostic", "CandidateDiagnostic"):
            assert set(shipped["$defs"][name]["properties"]) == set(generated["$defs"][name]["properties"])
            assert set(shipped["$defs"][name]["required"]) == set(generated["$defs"][name]["required"])

    def test_written_file_conforms(self, diagnose_config: RunConfig) -> None:
        """The written JSON parses back into the report model and uses only schema keys."""
        path = run_diagnose(diagnose_config, 0, 1)
        shipped = self._shipped()
        data = json.loads(path.read_text(encoding="utf-8"))

        assert path.name == "diagnose_obs_0_1.json"
        DiagnosticReport.model_validate(data)
        assert set(data) == set(shipped["required"])
        season_keys = set(shipped["$defs"]["SeasonDiagnostic"]["required"])
        candidate_keys = set(shipped["$defs"]["CandidateDiagnostic"]["required"])
        for season in data["seasons"]:
            assert set(season) == season_keys
            for candidate in season["candidates"]:
                assert set(candidate) == candidate_keys
