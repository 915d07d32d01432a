"""ABOUTME: Exception types raised across stitchqm.
ABOUTME: All derive from built-in exceptions so callers can catch ValueError/KeyError broadly."""


class ProbabilityDomainError(ValueError):
    """A probability argument lies outside [0, 1]."""


class InsufficientSampleError(ValueError):
    """Too few (wet-day) values to estimate the requested quantity."""


class DegenerateVarianceError(ValueError):
    """Both samples of a t-test are constant and equal, so the statistic is undefined."""


class ConfigError(ValueError):
    """Run configuration file is malformed or names unknown keys."""


class GridFormatError(ValueError):
    """Base class for malformed grid-stack files."""


class MalformedHeaderError(GridFormatError):
    """GSF header line is missing, not JSON, or lacks required fields."""


class TruncatedPayloadError(GridFormatError):
    """GSF payload length disagrees with the header dimensions."""


class DimensionMismatchError(GridFormatError):
    """Arrays or stacks that must share dimensions do not."""


class CsvParseError(ValueError):
    """A pixel CSV line could not be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DateOrderError(CsvParseError):
    """Pixel CSV dates are not strictly increasing."""


class ModelStoreError(ValueError):
    """Base class for model store read failures."""


class StoreVersionError(ModelStoreError):
    """Model store record was written by an incompatible format version."""


class StoreSchemaError(ModelStoreError):
    """Model store record does not match the expected schema."""


class MissingCandidateError(KeyError):
    """A stitch construction lacks one of its required candidate fits."""


class MissingModelError(KeyError):
    """No fitted model exists for a requested pixel-season."""


class PixelOutOfRangeError(IndexError):
    """Pixel indices fall outside the grid."""
