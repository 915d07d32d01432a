"""ABOUTME: Parser for single-pixel daily CSV series (ISO date, value in mm/day).
ABOUTME: Blank values are missing, calendar gaps become NaN, parse errors carry the line number."""

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt

from stitchqm.exceptions import CsvParseError, DateOrderError
from stitchqm.ingestion.grid import DateArray, GridStack
from stitchqm.ingestion.gsf import read_gsf

_EXPECTED_FIELDS = 2


@dataclass(frozen=True)
class PixelSeries:
    """Contiguous daily series of one pixel; NaN marks missing days."""

    dates: DateArray
    values: npt.NDArray[np.float64]

    @property
    def n_days(self) -> int:
        """Number of days covered, missing ones included."""
        return int(self.dates.size)


def _parse_date(text: str, line_number: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise CsvParseError(f"invalid ISO date {text!r}", line_number) from None


def _parse_value(text: str, line_number: int) -> float:
    stripped = text.strip()
    if not stripped:
        return np.nan
    try:
        value = float(stripped)
    except ValueError:
        raise CsvParseError(f"invalid value {text!r}", line_number) from None
    if not np.isfinite(value) or value < 0:
        raise CsvParseError(f"value must be finite and non-negative, got {text!r}", line_number)
    return value


def _is_header(row: list[str]) -> bool:
    try:
        dt.date.fromisoformat(row[0].strip())
    except ValueError:
        return True
    return False


def parse_pixel_rows(rows: list[list[str]]) -> PixelSeries:
    """Build a series from CSV rows; the first row may be a header.

    Raises:
        CsvParseError: Wrong field count, bad date or bad value (1-based line number).
        DateOrderError: Dates not strictly increasing.
    """
    dates: list[dt.date] = []
    values: list[float] = []
    for index, row in enumerate(rows):
        line_number = index + 1
        if not row or all(not cell.strip() for cell in row):
            continue
        if index == 0 and _is_header(row):
            continue
        if len(row) != _EXPECTED_FIELDS:
            raise CsvParseError(f"expected {_EXPECTED_FIELDS} fields, found {len(row)}", line_number)
        day = _parse_date(row[0], line_number)
        if dates and day <= dates[-1]:
            raise DateOrderError(f"date {day} does not follow {dates[-1]}", line_number)
        dates.append(day)
        values.append(_parse_value(row[1], line_number))

    if not dates:
        return PixelSeries(dates=np.array([], dtype="datetime64[D]"), values=np.array([], dtype=np.float64))

    parsed = np.array(dates, dtype="datetime64[D]")
    full = np.arange(parsed[0], parsed[-1] + np.timedelta64(1, "D"), dtype="datetime64[D]")
    series = np.full(full.size, np.nan)
    series[(parsed - parsed[0]).astype(np.int64)] = values
    return PixelSeries(dates=full, values=series)


def read_pixel_csv(path: Path) -> PixelSeries:
    """Read a two-column ``date,value`` CSV.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        CsvParseError: On any malformed line.
    """
    if not path.exists():
        raise FileNotFoundError(f"Pixel CSV not found: {path}")
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    return parse_pixel_rows(rows)


def stack_from_pixel_series(series: PixelSeries, lat: float = 0.0, lon: float = 0.0) -> GridStack:
    """Lift a pixel series into a 1x1 grid stack."""
    return GridStack(
        lats=np.array([lat]),
        lons=np.array([lon]),
        dates=series.dates,
        values=series.values.reshape(-1, 1, 1),
    )


def read_stack(path: Path) -> GridStack:
    """Read a GSF stack, or a ``.csv`` pixel series as a 1x1 stack.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        GridFormatError: If a GSF file is malformed.
        CsvParseError: If a CSV line is malformed.
    """
    if path.suffix.lower() == ".csv":
        return stack_from_pixel_series(read_pixel_csv(path))
    return read_gsf(path)
