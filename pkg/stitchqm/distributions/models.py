"""ABOUTME: Wet-day distribution families with one evaluation interface.
ABOUTME: Gamma, ExpW, EGP, empirical and stitched models with cdf, quantile, density and sampling."""

from typing import Annotated, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import special

from stitchqm.exceptions import ProbabilityDomainError

FloatArray = npt.NDArray[np.float64]
Evaluated = FloatArray | np.float64

# Below this tail index the EGP is evaluated with its exponential (xi = 0) limit.
XI_ZERO = 1e-12

# Absorbs float noise in n * p when p was built as i / n.
_STEP_EPS = 1e-9

SEGMENT_TAGS: dict[str, str] = {
    "gamma": "Gamma",
    "expw": "ExpW",
    "egp": "EGP",
    "empirical": "EMP",
}

# Stitch categories Stitch-BJ may produce, lower tail first.
STITCH_LABELS = frozenset(
    {
        "EGP",
        "ExpW",
        "EMP",
        "ExpW-EGP",
        "EGP-EMP",
        "EMP-EGP",
        "EMP-EGP-ExpW",
        "ExpW-EGP-EMP",
        "EMP-ExpW",
        "ExpW-EMP",
    }
)


class _Family(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class GammaParams(_Family):
    """Gamma wet-day intensity model, evaluated on ``x - shift``."""

    family: Literal["gamma"] = "gamma"
    k: float = Field(gt=0)
    theta: float = Field(gt=0)
    shift: float = Field(default=1.0, ge=0)

    def _cdf(self, y: FloatArray) -> FloatArray:
        return special.gammainc(self.k, y / self.theta)

    def _ppf(self, p: FloatArray) -> FloatArray:
        return special.gammaincinv(self.k, p) * self.theta

    def _logpdf(self, y: FloatArray) -> FloatArray:
        return (self.k - 1.0) * np.log(y) - y / self.theta - special.gammaln(self.k) - self.k * np.log(self.theta)


class ExpWParams(_Family):
    """Exponentiated Weibull: ``(1 - exp(-(y/lam)^k))^alpha``; alpha = 1 is the Weibull."""

    family: Literal["expw"] = "expw"
    k: float = Field(gt=0)
    lam: float = Field(gt=0)
    alpha: float = Field(gt=0)
    shift: float = Field(default=1.0, ge=0)

    def _cdf(self, y: FloatArray) -> FloatArray:
        z = (y / self.lam) ** self.k
        return (-np.expm1(-z)) ** self.alpha

    def _ppf(self, p: FloatArray) -> FloatArray:
        with np.errstate(divide="ignore"):
            return self.lam * (-np.log1p(-(p ** (1.0 / self.alpha)))) ** (1.0 / self.k)

    def _logpdf(self, y: FloatArray) -> FloatArray:
        z = (y / self.lam) ** self.k
        return (
            np.log(self.alpha)
            + np.log(self.k)
            - np.log(self.lam)
            + (self.k - 1.0) * np.log(y / self.lam)
            - z
            + (self.alpha - 1.0) * np.log(-np.expm1(-z))
        )


class EGPParams(_Family):
    """Type-1 extended generalized Pareto: ``H(y)^kappa`` with ``H`` the GPD(sigma, xi) cdf.

    ``censor`` is the left-censoring level (raw mm) used when fitting; evaluation ignores it.
    """

    family: Literal["egp"] = "egp"
    sigma: float = Field(gt=0)
    xi: float = Field(ge=0)
    kappa: float = Field(gt=0)
    shift: float = Field(default=1.0, ge=0)
    censor: float = Field(default=3.0, ge=0)

    def _gpd_cdf(self, y: FloatArray) -> FloatArray:
        if self.xi <= XI_ZERO:
            return -np.expm1(-y / self.sigma)
        return -np.expm1(-np.log1p(self.xi * y / self.sigma) / self.xi)

    def _cdf(self, y: FloatArray) -> FloatArray:
        return self._gpd_cdf(y) ** self.kappa

    def _ppf(self, p: FloatArray) -> FloatArray:
        q = p ** (1.0 / self.kappa)
        with np.errstate(divide="ignore"):
            if self.xi <= XI_ZERO:
                return -self.sigma * np.log1p(-q)
            return self.sigma / self.xi * np.expm1(-self.xi * np.log1p(-q))

    def _logpdf(self, y: FloatArray) -> FloatArray:
        if self.xi <= XI_ZERO:
            log_h = -np.log(self.sigma) - y / self.sigma
        else:
            log_h = -np.log(self.sigma) - (1.0 / self.xi + 1.0) * np.log1p(self.xi * y / self.sigma)
        return np.log(self.kappa) + log_h + (self.kappa - 1.0) * np.log(self._gpd_cdf(y))


class EmpiricalModel(_Family):
    """Empirical wet-day distribution ``F_n`` over the stored order statistics."""

    family: Literal["empirical"] = "empirical"
    sorted_sample: tuple[float, ...] = Field(min_length=1)

    @field_validator("sorted_sample")
    @classmethod
    def _check_sorted_positive(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        arr = np.asarray(value, dtype=np.float64)
        if np.any(arr <= 0):
            raise ValueError("empirical sample must hold positive wet-day values")
        if np.any(np.diff(arr) < 0):
            raise ValueError("empirical sample must be sorted ascending")
        return value

    @property
    def n(self) -> int:
        """Sample size."""
        return len(self.sorted_sample)

    def values(self) -> FloatArray:
        """Order statistics as an array."""
        return np.asarray(self.sorted_sample, dtype=np.float64)


ParametricModel = GammaParams | ExpWParams | EGPParams

SegmentModel = Annotated[GammaParams | ExpWParams | EGPParams | EmpiricalModel, Field(discriminator="family")]


def segment_tag(model: "SegmentModel") -> str:
    """Short display tag of a stitch segment (``EGP``, ``ExpW``, ``EMP``, ``Gamma``)."""
    return SEGMENT_TAGS[model.family]


def compose_label(core: "SegmentModel", lower: "SegmentModel | None", upper: "SegmentModel | None") -> str:
    """Stitch category label, lower tail first: e.g. ``EMP-EGP-ExpW``."""
    parts = [segment_tag(lower)] if lower is not None else []
    parts.append(segment_tag(core))
    if upper is not None:
        parts.append(segment_tag(upper))
    return "-".join(parts)


class StitchModel(_Family):
    """Spliced model: ``lower`` below ``p_lower``, ``core`` in between, ``upper`` from ``p_upper`` on."""

    family: Literal["stitch"] = "stitch"
    core: SegmentModel
    lower: SegmentModel | None = None
    upper: SegmentModel | None = None
    p_lower: float = Field(default=0.0, ge=0, le=1)
    p_upper: float = Field(default=1.0, ge=0, le=1)
    label: str

    @field_validator("label")
    @classmethod
    def _check_known_label(cls, value: str) -> str:
        if value not in STITCH_LABELS:
            raise ValueError(f"unknown stitch category {value!r}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "StitchModel":
        if self.p_lower > self.p_upper:
            raise ValueError(f"p_lower ({self.p_lower}) exceeds p_upper ({self.p_upper})")
        expected = compose_label(self.core, self.lower, self.upper)
        if self.label != expected:
            raise ValueError(f"label {self.label!r} does not match segments ({expected!r})")
        return self

    @classmethod
    def assemble(
        cls,
        core: "SegmentModel",
        lower: "SegmentModel | None" = None,
        upper: "SegmentModel | None" = None,
        p_lower: float = 0.0,
        p_upper: float = 1.0,
    ) -> "StitchModel":
        """Build a stitch whose label is derived from the segments present."""
        return cls(
            core=core,
            lower=lower,
            upper=upper,
            p_lower=p_lower if lower is not None else 0.0,
            p_upper=p_upper if upper is not None else 1.0,
            label=compose_label(core, lower, upper),
        )


DistModel = Annotated[
    GammaParams | ExpWParams | EGPParams | EmpiricalModel | StitchModel,
    Field(discriminator="family"),
]


def _prepare(x: npt.ArrayLike) -> tuple[FloatArray, tuple[int, ...]]:
    arr = np.asarray(x, dtype=np.float64)
    return np.atleast_1d(arr).ravel().copy(), arr.shape


def _finish(values: FloatArray, shape: tuple[int, ...]) -> Evaluated:
    out = values.reshape(shape)
    if out.ndim == 0:
        return np.float64(out[()])
    return out


def _check_probabilities(p: FloatArray) -> None:
    if np.any((p < 0.0) | (p > 1.0)):
        bad = p[(p < 0.0) | (p > 1.0)][0]
        raise ProbabilityDomainError(f"probability {bad!r} outside [0, 1]")


def _cdf_array(model: "DistModel", x: FloatArray) -> FloatArray:
    if isinstance(model, StitchModel):
        return _stitch_cdf_array(model, x)
    if isinstance(model, EmpiricalModel):
        values = model.values()
        out = np.searchsorted(values, x, side="right") / model.n
        return np.where(np.isnan(x), np.nan, out)
    y = x - model.shift
    out = np.zeros_like(y)
    positive = y > 0
    out[positive] = model._cdf(y[positive])
    out[np.isnan(y)] = np.nan
    return np.clip(out, 0.0, 1.0)


def _empirical_step(values: FloatArray, p: FloatArray) -> FloatArray:
    n = values.size
    index = np.ceil(n * np.nan_to_num(p) - _STEP_EPS).astype(np.int64)
    index = np.clip(index, 1, n)
    out = values[index - 1]
    return np.where(np.isnan(p), np.nan, out)


def _quantile_array(model: "DistModel", p: FloatArray) -> FloatArray:
    if isinstance(model, StitchModel):
        return _stitch_quantile_array(model, p)
    if isinstance(model, EmpiricalModel):
        return _empirical_step(model.values(), p)
    return model._ppf(p) + model.shift


def cdf(model: "DistModel", x: npt.ArrayLike) -> Evaluated:
    """Cumulative probability of ``x`` (mm) under ``model``.

    Parametric families return 0 at or below their shift, the empirical model below its minimum.
    """
    arr, shape = _prepare(x)
    return _finish(_cdf_array(model, arr), shape)


def quantile(model: "DistModel", p: npt.ArrayLike) -> Evaluated:
    """Inverse cdf. The empirical inverse is the step function ``x_(ceil(n p))`` clamped to the sample.

    Raises:
        ProbabilityDomainError: If any probability lies outside [0, 1].
    """
    arr, shape = _prepare(p)
    _check_probabilities(arr)
    return _finish(_quantile_array(model, arr), shape)


def _stitch_quantile_array(model: StitchModel, p: FloatArray) -> FloatArray:
    out = _quantile_array(model.core, p)
    if model.lower is None and model.upper is None:
        return out

    floor = -np.inf
    if model.lower is not None:
        below = p < model.p_lower
        out[below] = _quantile_array(model.lower, p[below])
        floor = float(_quantile_array(model.lower, np.array([model.p_lower]))[0])
        core_part = ~below
        out[core_part] = np.maximum(out[core_part], floor)
    if model.upper is not None:
        above = p >= model.p_upper
        core_left = float(_quantile_array(model.core, np.array([model.p_upper]))[0])
        floor = max(floor, core_left)
        out[above] = np.maximum(_quantile_array(model.upper, p[above]), floor)
    return out


def stitch_quantile(model: StitchModel, p: npt.ArrayLike) -> Evaluated:
    """Piecewise quantile of a stitch, monotonized by a running maximum over probability.

    With neither tail segment present this is exactly ``quantile(model.core, p)``.
    """
    arr, shape = _prepare(p)
    _check_probabilities(arr)
    if model.lower is None and model.upper is None:
        return _finish(_quantile_array(model.core, arr), shape)
    return _finish(_stitch_quantile_array(model, arr), shape)


def _stitch_cdf_array(model: StitchModel, x: FloatArray) -> FloatArray:
    if model.lower is None and model.upper is None:
        return _cdf_array(model.core, x)
    out = np.clip(_cdf_array(model.core, x), model.p_lower, model.p_upper)
    if model.lower is not None:
        junction = _stitch_quantile_array(model, np.array([model.p_lower]))[0]
        below = x < junction
        out[below] = np.minimum(_cdf_array(model.lower, x[below]), model.p_lower)
    if model.upper is not None:
        junction = _stitch_quantile_array(model, np.array([model.p_upper]))[0]
        above = x >= junction
        out[above] = np.maximum(_cdf_array(model.upper, x[above]), model.p_upper)
    out[np.isnan(x)] = np.nan
    return out


def stitch_cdf(model: StitchModel, x: npt.ArrayLike) -> Evaluated:
    """Cdf of a stitch: each segment's cdf confined to its probability band."""
    arr, shape = _prepare(x)
    return _finish(_stitch_cdf_array(model, arr), shape)


def logpdf(model: "DistModel", x: npt.ArrayLike) -> Evaluated:
    """Log density (mm^-1) of a parametric model; ``-inf`` outside the support.

    Raises:
        TypeError: For empirical or stitched models, which have no density.
    """
    if isinstance(model, EmpiricalModel | StitchModel):
        raise TypeError(f"{model.family} model has no density")
    arr, shape = _prepare(x)
    y = arr - model.shift
    out = np.full_like(y, -np.inf)
    positive = y > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[positive] = model._logpdf(y[positive])
    out[np.isnan(y)] = np.nan
    return _finish(out, shape)


def pdf(model: "DistModel", x: npt.ArrayLike) -> Evaluated:
    """Density (mm^-1) of a parametric model."""
    return np.exp(logpdf(model, x))


def sample(model: "DistModel", count: int, seed: int) -> FloatArray:
    """Draw ``count`` values by inverse-cdf sampling from a seeded generator."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    return _quantile_array(model, u)


def empirical_quantiles(values: npt.ArrayLike, probs: npt.ArrayLike) -> FloatArray:
    """Step-inverse quantiles of an unsorted sample at ``probs``.

    Raises:
        ValueError: If the sample is empty.
    """
    arr = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if arr.size == 0:
        raise ValueError("cannot take quantiles of an empty sample")
    p, _ = _prepare(probs)
    _check_probabilities(p)
    return _empirical_step(arr, p)
