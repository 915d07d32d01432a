"""ABOUTME: Reader and writer for GSF grid-stack files.
ABOUTME: One JSON header line, then a little-endian float32 payload in time, lat, lon order."""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from stitchqm.exceptions import DimensionMismatchError, GridFormatError, MalformedHeaderError, TruncatedPayloadError
from stitchqm.ingestion.grid import GridStack

logger = logging.getLogger(__name__)

GSF_VERSION = 1
GSF_UNITS = "mm/day"
_PAYLOAD_DTYPE = np.dtype("<f4")


class GsfHeader(BaseModel):
    """First line of a GSF file."""

    model_config = ConfigDict(extra="forbid")

    version: int
    n_time: int = Field(ge=0)
    n_lat: int = Field(ge=1)
    n_lon: int = Field(ge=1)
    lats: list[float]
    lons: list[float]
    start_date: str
    units: str = GSF_UNITS


def encode_gsf(stack: GridStack) -> bytes:
    """Serialize ``stack``; identical stacks always give identical bytes.

    Raises:
        GridFormatError: If the stack dates are not a contiguous daily run.
    """
    if not stack.is_contiguous():
        raise GridFormatError("GSF stores contiguous daily stacks only; reassemble the seasons first")
    if stack.n_time == 0:
        raise GridFormatError("GSF cannot store an empty stack: the start date would be undefined")
    header = GsfHeader(
        version=GSF_VERSION,
        n_time=stack.n_time,
        n_lat=stack.n_lat,
        n_lon=stack.n_lon,
        lats=stack.lats.tolist(),
        lons=stack.lons.tolist(),
        start_date=str(stack.dates[0]),
        units=GSF_UNITS,
    )
    head = json.dumps(header.model_dump(), separators=(",", ":")).encode("utf-8")
    payload = np.ascontiguousarray(stack.values, dtype=_PAYLOAD_DTYPE).tobytes(order="C")
    return head + b"\n" + payload


def decode_gsf(data: bytes) -> GridStack:
    """Parse GSF bytes into a GridStack.

    Raises:
        MalformedHeaderError: Missing newline, invalid JSON, missing fields or wrong version/units.
        DimensionMismatchError: Coordinate vectors disagree with the declared sizes.
        TruncatedPayloadError: Payload length disagrees with the declared sizes.
    """
    newline = data.find(b"\n")
    if newline < 0:
        raise MalformedHeaderError("no header line terminator found")
    try:
        header = GsfHeader.model_validate(json.loads(data[:newline].decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as e:
        raise MalformedHeaderError(f"invalid GSF header: {e}") from e
    if header.version != GSF_VERSION:
        raise MalformedHeaderError(f"unsupported GSF version {header.version}, expected {GSF_VERSION}")
    if header.units != GSF_UNITS:
        raise MalformedHeaderError(f"unsupported units {header.units!r}, expected {GSF_UNITS!r}")
    if len(header.lats) != header.n_lat or len(header.lons) != header.n_lon:
        raise DimensionMismatchError(
            f"header declares {header.n_lat}x{header.n_lon} but lists {len(header.lats)}x{len(header.lons)} coordinates"
        )
    try:
        start = np.datetime64(header.start_date, "D")
    except ValueError as e:
        raise MalformedHeaderError(f"invalid start_date {header.start_date!r}") from e

    payload = data[newline + 1 :]
    expected = header.n_time * header.n_lat * header.n_lon * _PAYLOAD_DTYPE.itemsize
    if len(payload) != expected:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, header implies {expected}")
    values = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(header.n_time, header.n_lat, header.n_lon)
    dates = start + np.arange(header.n_time).astype("timedelta64[D]")
    return GridStack(
        lats=np.asarray(header.lats),
        lons=np.asarray(header.lons),
        dates=dates,
        values=values.astype(np.float32),
    )


def write_gsf(stack: GridStack, path: Path) -> Path:
    """Write ``stack`` to ``path``, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_gsf(stack))
    logger.info("Wrote %s (%d days, %dx%d)", path, stack.n_time, stack.n_lat, stack.n_lon)
    return path


def read_gsf(path: Path) -> GridStack:
    """Read a GSF file.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        GridFormatError: If the file is malformed (see ``decode_gsf``).
    """
    if not path.exists():
        raise FileNotFoundError(f"Grid stack not found: {path}")
    return decode_gsf(path.read_bytes())
