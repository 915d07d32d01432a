"""ABOUTME: Data formats at the boundary of the numerical core.
ABOUTME: Grid stacks and GSF files, single-pixel CSV series, and the fitted-model store."""

from stitchqm.ingestion.grid import GridStack
from stitchqm.ingestion.gsf import decode_gsf, encode_gsf, read_gsf, write_gsf
from stitchqm.ingestion.model_store import (
    MODEL_TAGS,
    FitDiagnostics,
    ModelRecord,
    ModelStore,
    dumps_models,
    load_models,
    loads_models,
    save_models,
)
from stitchqm.ingestion.pixel_csv import (
    PixelSeries,
    parse_pixel_rows,
    read_pixel_csv,
    read_stack,
    stack_from_pixel_series,
)

__all__ = [
    "MODEL_TAGS",
    "FitDiagnostics",
    "GridStack",
    "ModelRecord",
    "ModelStore",
    "PixelSeries",
    "decode_gsf",
    "dumps_models",
    "encode_gsf",
    "load_models",
    "loads_models",
    "parse_pixel_rows",
    "read_gsf",
    "read_pixel_csv",
    "read_stack",
    "save_models",
    "stack_from_pixel_series",
    "write_gsf",
]
