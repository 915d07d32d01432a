"""ABOUTME: Persistence of fitted pixel-season models as versioned JSON lines.
ABOUTME: One record per (pixel, season, model tag); writes are sorted so reruns give identical files."""

import json
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from stitchqm.distributions.models import DistModel
from stitchqm.exceptions import MissingModelError, StoreSchemaError, StoreVersionError

logger = logging.getLogger(__name__)

STORE_VERSION = 1

SeasonName = Literal["DJF", "MAM", "JJA", "SON"]
ModelTag = Literal["gamma", "expw", "egp", "emp", "stitchbj"]
MODEL_TAGS: tuple[ModelTag, ...] = ("gamma", "expw", "egp", "emp", "stitchbj")

RecordKey = tuple[int, int, str, str]


class FitDiagnostics(BaseModel):
    """Optimizer outcome kept alongside a fitted model."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    neg_log_lik: float | None
    converged: bool
    iterations: int = Field(ge=0)


class ModelRecord(BaseModel):
    """Fitted wet-day model of one pixel-season plus its dry-day probability.

    ``model`` is None when the pixel-season has no wet day. ``fallback`` marks an empirical
    model used because the sample was too small for the requested family.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    version: int = STORE_VERSION
    lat_index: int = Field(ge=0)
    lon_index: int = Field(ge=0)
    season: SeasonName
    tag: ModelTag
    model: DistModel | None
    label: str | None = None
    alpha: float = Field(ge=0, le=1)
    n_days: int = Field(ge=0)
    n_wet: int = Field(ge=0)
    threshold_mm: float = Field(gt=0)
    fit: FitDiagnostics | None = None
    i_l: int | None = None
    i_u: int | None = None
    fallback: bool = False
    empty_sample: bool = False

    @property
    def key(self) -> RecordKey:
        """Store key ``(lat_index, lon_index, season, tag)``."""
        return (self.lat_index, self.lon_index, self.season, self.tag)


@dataclass
class ModelStore:
    """Fitted records of one dataset, addressable by pixel, season and tag."""

    records: dict[RecordKey, ModelRecord] = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: Iterable[ModelRecord]) -> "ModelStore":
        """Build a store; later records replace earlier ones with the same key."""
        store = cls()
        for record in records:
            store.add(record)
        return store

    def add(self, record: ModelRecord) -> None:
        """Insert or replace a record."""
        self.records[record.key] = record

    def get(self, lat_index: int, lon_index: int, season: str, tag: str) -> ModelRecord:
        """Look up one record.

        Raises:
            MissingModelError: Naming the pixel-season and tag when absent.
        """
        try:
            return self.records[(lat_index, lon_index, season, tag)]
        except KeyError:
            raise MissingModelError(
                f"no '{tag}' model for pixel ({lat_index}, {lon_index}) season {season}"
            ) from None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ModelRecord]:
        return (self.records[key] for key in sorted(self.records))


def dumps_models(store: ModelStore) -> str:
    """Serialize ``store`` as JSON lines in key order."""
    return "".join(record.model_dump_json() + "\n" for record in store)


def loads_models(text: str) -> ModelStore:
    """Parse JSON lines produced by ``dumps_models``.

    Raises:
        StoreVersionError: A record carries another format version.
        StoreSchemaError: A line is not JSON or does not match the record schema.
    """
    store = ModelStore()
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            raise StoreSchemaError(f"line {line_number}: not valid JSON ({e.msg})") from e
        if not isinstance(raw, dict):
            raise StoreSchemaError(f"line {line_number}: expected a JSON object")
        version = raw.get("version")
        if version != STORE_VERSION:
            raise StoreVersionError(f"line {line_number}: store version {version!r}, expected {STORE_VERSION}")
        try:
            store.add(ModelRecord.model_validate(raw))
        except ValidationError as e:
            raise StoreSchemaError(f"line {line_number}: {e}") from e
    return store


def save_models(store: ModelStore, path: Path) -> Path:
    """Write ``store`` to ``path``, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_models(store), encoding="utf-8")
    logger.info("Saved %d model records to %s", len(store), path)
    return path


def load_models(path: Path) -> ModelStore:
    """Read a model store file.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ModelStoreError: If the content is invalid (see ``loads_models``).
    """
    if not path.exists():
        raise FileNotFoundError(f"Model store not found: {path}")
    return loads_models(path.read_text(encoding="utf-8"))
