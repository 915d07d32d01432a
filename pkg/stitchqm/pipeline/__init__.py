"""ABOUTME: Pipeline stages driven by the CLI.
ABOUTME: Stationarity tests, model fitting, correction, evaluation and per-pixel diagnostics."""

from stitchqm.pipeline.correct import run_correct
from stitchqm.pipeline.diagnose import DiagnosticReport, run_diagnose
from stitchqm.pipeline.evaluate import run_evaluate
from stitchqm.pipeline.fit import run_fit
from stitchqm.pipeline.stationarity import run_stationarity

__all__ = [
    "DiagnosticReport",
    "run_correct",
    "run_diagnose",
    "run_evaluate",
    "run_fit",
    "run_stationarity",
]
