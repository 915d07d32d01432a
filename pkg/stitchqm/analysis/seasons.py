"""ABOUTME: Seasonal and monthly partitioning, wet-day extraction and stationarity t-tests.
ABOUTME: Builds the pairwise rejection-proportion matrices compared across datasets."""

import itertools
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt
import polars as pl
from scipy import stats

from stitchqm.exceptions import DegenerateVarianceError, InsufficientSampleError
from stitchqm.ingestion.grid import DateArray, GridStack

logger = logging.getLogger(__name__)

SIGNIFICANCE_LEVEL = 0.05

MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


class Season(StrEnum):
    """Meteorological season; DJF joins December with the following January and February."""

    DJF = "DJF"
    MAM = "MAM"
    JJA = "JJA"
    SON = "SON"

    @property
    def code(self) -> int:
        """Stable integer used to key random streams."""
        return list(Season).index(self)

    @property
    def months(self) -> tuple[int, int, int]:
        """Calendar months in chronological order within the season."""
        return _SEASON_MONTHS[self]


_SEASON_MONTHS: dict[Season, tuple[int, int, int]] = {
    Season.DJF: (12, 1, 2),
    Season.MAM: (3, 4, 5),
    Season.JJA: (6, 7, 8),
    Season.SON: (9, 10, 11),
}


def calendar_months(dates: DateArray) -> npt.NDArray[np.int64]:
    """Month number (1-12) of each date."""
    return dates.astype("datetime64[M]").astype(np.int64) % 12 + 1


def season_of_month(month: int) -> Season:
    """Season containing a calendar month."""
    for season, months in _SEASON_MONTHS.items():
        if month in months:
            return season
    raise ValueError(f"month must be in 1..12, got {month}")


def season_mask(dates: DateArray, season: Season | str) -> npt.NDArray[np.bool_]:
    """True for the dates falling in ``season``."""
    return np.isin(calendar_months(dates), Season(season).months)


def split_seasons(stack: GridStack) -> dict[Season, GridStack]:
    """Partition a stack into its four seasons; every day lands in exactly one."""
    return {season: stack.select_days(season_mask(stack.dates, season)) for season in Season}


def month_groups(stack: GridStack, season: Season | str) -> dict[str, GridStack]:
    """Split the days of ``season`` by calendar month, in season order (Dec, Jan, Feb for DJF)."""
    months = calendar_months(stack.dates)
    return {MONTH_NAMES[m - 1]: stack.select_days(months == m) for m in Season(season).months}


@dataclass(frozen=True)
class SeasonalSample:
    """Wet-day intensities and dry-day probability of one pixel-season.

    ``n_days`` counts valid (non-NaN) days. A pixel-season without valid days has
    ``alpha = 1`` and an empty ``wet`` vector.
    """

    lat_index: int
    lon_index: int
    season: Season
    wet: npt.NDArray[np.float64]
    alpha: float
    n_days: int

    @property
    def n_wet(self) -> int:
        """Number of wet days."""
        return int(self.wet.size)


def extract_sample(
    stack: GridStack, lat_index: int, lon_index: int, season: Season | str, threshold_mm: float
) -> SeasonalSample:
    """Wet days (strictly above ``threshold_mm``) and dry-day probability of one pixel-season.

    Raises:
        PixelOutOfRangeError: If the pixel is not on the grid.
    """
    season = Season(season)
    series = stack.pixel_series(lat_index, lon_index)[season_mask(stack.dates, season)]
    valid = series[~np.isnan(series)]
    wet = valid[valid > threshold_mm]
    alpha = 1.0 - wet.size / valid.size if valid.size else 1.0
    return SeasonalSample(
        lat_index=lat_index,
        lon_index=lon_index,
        season=season,
        wet=wet,
        alpha=alpha,
        n_days=int(valid.size),
    )


@dataclass(frozen=True)
class TTestReport:
    """Two-sample test of equal means between groups ``pairing[0]`` and ``pairing[1]``."""

    pairing: tuple[str, str]
    statistic: float
    p_value: float
    rejected_at_5pct: bool


def ttest_means(
    a: npt.ArrayLike,
    b: npt.ArrayLike,
    *,
    welch: bool = False,
    pairing: tuple[str, str] = ("a", "b"),
) -> TTestReport:
    """Pooled-variance Student's t-test (Welch's when ``welch``), two-sided; NaN values dropped.

    Raises:
        InsufficientSampleError: Fewer than two values in either sample.
        DegenerateVarianceError: Both samples constant and equal.
    """
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    x, y = x[~np.isnan(x)], y[~np.isnan(y)]
    if x.size < 2 or y.size < 2:
        raise InsufficientSampleError(f"t-test needs two values per sample, got {x.size} and {y.size}")

    if np.ptp(x) == 0 and np.ptp(y) == 0:
        if x[0] == y[0]:
            raise DegenerateVarianceError("both samples are constant and equal")
        statistic = float(np.copysign(np.inf, x[0] - y[0]))
        return TTestReport(pairing=pairing, statistic=statistic, p_value=0.0, rejected_at_5pct=True)

    result = stats.ttest_ind(x, y, equal_var=not welch)
    p_value = float(result.pvalue)
    return TTestReport(
        pairing=pairing,
        statistic=float(result.statistic),
        p_value=p_value,
        rejected_at_5pct=p_value < SIGNIFICANCE_LEVEL,
    )


def rejection_proportions(groups: Mapping[str, GridStack], *, welch: bool = False) -> pl.DataFrame:
    """Share of pixels whose group means differ at the 5% level, for every pair of groups.

    Pixels where a group has fewer than two valid days are left out of that pair's
    denominator; pixels with constant equal samples count as not rejected.

    Returns:
        Square matrix with a ``group`` column and one column per group; the diagonal is null.
    """
    labels = list(groups)
    if not labels:
        raise ValueError("no groups to compare")
    first = groups[labels[0]]
    for stack in groups.values():
        first.require_same_grid(stack)

    matrix: dict[tuple[str, str], float | None] = {}
    for left, right in itertools.combinations(labels, 2):
        rejected = tested = 0
        for i, j in itertools.product(range(first.n_lat), range(first.n_lon)):
            try:
                report = ttest_means(
                    groups[left].pixel_series(i, j),
                    groups[right].pixel_series(i, j),
                    welch=welch,
                    pairing=(left, right),
                )
            except InsufficientSampleError:
                continue
            except DegenerateVarianceError:
                tested += 1
                continue
            tested += 1
            rejected += report.rejected_at_5pct
        share = rejected / tested if tested else None
        if not tested:
            logger.warning("No testable pixel for %s vs %s", left, right)
        matrix[(left, right)] = matrix[(right, left)] = share

    return _to_frame(labels, matrix)


def _to_frame(labels: Sequence[str], matrix: Mapping[tuple[str, str], float | None]) -> pl.DataFrame:
    columns: dict[str, list[object]] = {"group": list(labels)}
    for column in labels:
        columns[column] = [matrix.get((row, column)) for row in labels]
    schema: dict[str, pl.DataType | type[pl.DataType]] = {"group": pl.Utf8}
    schema.update({label: pl.Float64 for label in labels})
    return pl.DataFrame(columns, schema=schema)


def combine_triangles(upper: pl.DataFrame, lower: pl.DataFrame) -> pl.DataFrame:
    """Merge two proportion matrices: cells above the diagonal from ``upper``, below from ``lower``.

    Raises:
        ValueError: If the matrices list different groups.
    """
    labels = upper["group"].to_list()
    if labels != lower["group"].to_list():
        raise ValueError("matrices must list the same groups in the same order")
    matrix: dict[tuple[str, str], float | None] = {}
    for r, row in enumerate(labels):
        for c, column in enumerate(labels):
            if r < c:
                matrix[(row, column)] = upper[column][r]
            elif r > c:
                matrix[(row, column)] = lower[column][r]
    return _to_frame(labels, matrix)
