"""ABOUTME: In-memory grid stack of dated daily precipitation fields.
ABOUTME: Validates dimensions and ordering; supports day selection, concatenation and grid comparison."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from stitchqm.exceptions import DimensionMismatchError, GridFormatError, PixelOutOfRangeError

DateArray = npt.NDArray[np.datetime64]

# Coordinates of two stacks must agree to this tolerance (degrees).
GRID_TOLERANCE_DEG = 1e-9

_ONE_DAY = np.timedelta64(1, "D")


def _strictly_monotone(values: npt.NDArray[np.float64]) -> bool:
    if values.size < 2:
        return True
    steps = np.diff(values)
    return bool(np.all(steps > 0) or np.all(steps < 0))


@dataclass(frozen=True)
class GridStack:
    """Daily precipitation (mm/day) on a regular lat/lon grid, indexed ``[time, lat, lon]``.

    Dates are strictly increasing but need not be contiguous: seasonal subsets keep their
    original dates. Missing values are NaN. Values are held as float32, the on-disk precision.
    """

    lats: npt.NDArray[np.float64]
    lons: npt.NDArray[np.float64]
    dates: DateArray
    values: npt.NDArray[np.float32]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lats", np.asarray(self.lats, dtype=np.float64))
        object.__setattr__(self, "lons", np.asarray(self.lons, dtype=np.float64))
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[D]"))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float32))

        expected = (self.dates.size, self.lats.size, self.lons.size)
        if self.values.shape != expected:
            raise DimensionMismatchError(f"values have shape {self.values.shape}, expected {expected}")
        if not (_strictly_monotone(self.lats) and _strictly_monotone(self.lons)):
            raise GridFormatError("latitudes and longitudes must be strictly monotone")
        if self.dates.size > 1 and np.any(np.diff(self.dates) <= np.timedelta64(0, "D")):
            raise GridFormatError("dates must be strictly increasing")

    @property
    def n_time(self) -> int:
        """Number of days."""
        return int(self.dates.size)

    @property
    def n_lat(self) -> int:
        """Number of latitude rows."""
        return int(self.lats.size)

    @property
    def n_lon(self) -> int:
        """Number of longitude columns."""
        return int(self.lons.size)

    def is_contiguous(self) -> bool:
        """True when the dates form an unbroken daily sequence."""
        return self.n_time < 2 or bool(np.all(np.diff(self.dates) == _ONE_DAY))

    def check_pixel(self, lat_index: int, lon_index: int) -> None:
        """Raise PixelOutOfRangeError unless the pixel lies on the grid."""
        if not (0 <= lat_index < self.n_lat and 0 <= lon_index < self.n_lon):
            raise PixelOutOfRangeError(
                f"pixel ({lat_index}, {lon_index}) outside grid of {self.n_lat}x{self.n_lon}"
            )

    def pixel_series(self, lat_index: int, lon_index: int) -> npt.NDArray[np.float64]:
        """Daily series of one pixel as float64."""
        self.check_pixel(lat_index, lon_index)
        return self.values[:, lat_index, lon_index].astype(np.float64)

    def select_days(self, mask: npt.NDArray[np.bool_]) -> "GridStack":
        """Sub-stack of the days where ``mask`` is True, dates preserved."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_time,):
            raise DimensionMismatchError(f"day mask has shape {mask.shape}, expected ({self.n_time},)")
        return GridStack(self.lats, self.lons, self.dates[mask], self.values[mask])

    def with_values(self, values: npt.ArrayLike) -> "GridStack":
        """Same grid and dates carrying new values."""
        return GridStack(self.lats, self.lons, self.dates, np.asarray(values, dtype=np.float32))

    def same_grid(self, other: "GridStack") -> bool:
        """True when both stacks share lats and lons within ``GRID_TOLERANCE_DEG``."""
        return (
            self.lats.shape == other.lats.shape
            and self.lons.shape == other.lons.shape
            and bool(np.all(np.abs(self.lats - other.lats) <= GRID_TOLERANCE_DEG))
            and bool(np.all(np.abs(self.lons - other.lons) <= GRID_TOLERANCE_DEG))
        )

    def require_same_grid(self, other: "GridStack") -> None:
        """Raise DimensionMismatchError when ``other`` sits on a different grid."""
        if not self.same_grid(other):
            raise DimensionMismatchError(
                f"grids differ: {self.n_lat}x{self.n_lon} vs {other.n_lat}x{other.n_lon} or coordinates disagree"
            )

    @classmethod
    def concat(cls, stacks: Sequence["GridStack"]) -> "GridStack":
        """Merge stacks on a common grid into one, ordered by date.

        Raises:
            ValueError: If ``stacks`` is empty.
            DimensionMismatchError: If the grids differ.
            GridFormatError: If a date appears in more than one stack.
        """
        if not stacks:
            raise ValueError("nothing to concatenate")
        first = stacks[0]
        for other in stacks[1:]:
            first.require_same_grid(other)
        dates = np.concatenate([s.dates for s in stacks])
        values = np.concatenate([s.values for s in stacks], axis=0)
        order = np.argsort(dates, kind="stable")
        return cls(first.lats, first.lons, dates[order], values[order])
