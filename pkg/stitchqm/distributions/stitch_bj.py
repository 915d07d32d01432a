"""ABOUTME: Order-statistic goodness-of-fit profiles and Stitch-BJ model assembly.
ABOUTME: Two-sided Beta p-values per order statistic, log-weighted thresholds calibrated by Monte-Carlo."""

import logging
import math
import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import polars as pl
from scipy import special

from stitchqm.distributions.fitting import FitResult
from stitchqm.distributions.models import (
    DistModel,
    EmpiricalModel,
    FloatArray,
    SegmentModel,
    StitchModel,
    cdf,
    quantile,
)
from stitchqm.exceptions import MissingCandidateError, ProbabilityDomainError
from stitchqm.settings import settings

logger = logging.getLogger(__name__)

BoolArray = npt.NDArray[np.bool_]

STITCH_CANDIDATES = ("egp", "expw", "emp")

# Plotting positions at or above this fraction feed the upper-tail error.
UPPER_TAIL_FRACTION = 0.95

# Upper bound on uniforms held in memory per calibration chunk.
_CALIBRATION_CHUNK = 2_000_000

# Sizes above this share a calibration constant with the nearest anchor on a geometric grid.
_EXACT_CALIBRATION_MAX = 64
_ANCHOR_RATIO = 1.05

_threshold_cache: dict[tuple[int, float, int, int], FloatArray] = {}
_constant_cache: dict[tuple[int, float, int, int], float] = {}
_threshold_lock = threading.Lock()


@dataclass(frozen=True)
class GofProfile:
    """Per-order-statistic p-values ``k_values`` against ``threshold``; index i is order statistic i + 1."""

    k_values: FloatArray
    threshold: FloatArray
    rejected: BoolArray

    @property
    def n(self) -> int:
        """Sample size."""
        return int(self.k_values.size)

    @property
    def rejection_count(self) -> int:
        """Number of rejected order statistics."""
        return int(np.count_nonzero(self.rejected))


@dataclass(frozen=True)
class RejectionIndices:
    """1-based lower and upper rejection indices; None when that half has no rejection."""

    i_l: int | None
    i_u: int | None


@dataclass(frozen=True)
class CandidateSummary:
    """How one parametric candidate fared on the sample."""

    tag: str
    rejection_count: int
    tail_error: float


@dataclass(frozen=True)
class StitchDecision:
    """Chosen stitch together with the evidence behind it."""

    chosen: StitchModel
    candidates_considered: tuple[CandidateSummary, ...]
    indices: RejectionIndices
    n: int

    @property
    def label(self) -> str:
        """Stitch category, e.g. ``EGP`` or ``EMP-EGP-ExpW``."""
        return self.chosen.label

    @property
    def lower_fraction(self) -> float | None:
        """Share of probability mass taken over by the lower tail segment."""
        return self.chosen.p_lower if self.chosen.lower is not None else None

    @property
    def upper_fraction(self) -> float | None:
        """Share of probability mass taken over by the upper tail segment."""
        return 1.0 - self.chosen.p_upper if self.chosen.upper is not None else None


def tail_weights(n: int) -> FloatArray:
    """Tail-emphasis weights ``1 / (1 + log(n / min(i, n - i + 1)))`` for i = 1..n."""
    i = np.arange(1, n + 1, dtype=np.float64)
    depth = np.minimum(i, n - i + 1.0)
    return 1.0 / (1.0 + np.log(n / depth))


def _order_pvalues(u: FloatArray) -> FloatArray:
    """Two-sided Beta(i, n - i + 1) p-values of sorted uniforms along the last axis."""
    n = u.shape[-1]
    i = np.arange(1, n + 1, dtype=np.float64)
    lower = special.betainc(i, n - i + 1.0, u)
    upper = special.betaincc(i, n - i + 1.0, u)
    return np.clip(2.0 * np.minimum(lower, upper), 0.0, 1.0)


def _calibration_constant(n: int, level: float, replicates: int, seed: int) -> float:
    # Rejection happens when k_i * n * w_i / level < c for some i, so c is the
    # level-quantile of the per-replicate minimum of that scaled statistic.
    scale = n * tail_weights(n) / level
    rng = np.random.default_rng([seed, n, round(level * 1e9)])
    rows = max(1, _CALIBRATION_CHUNK // n)
    minima = np.empty(replicates, dtype=np.float64)
    for start in range(0, replicates, rows):
        count = min(rows, replicates - start)
        u = np.sort(rng.random((count, n)), axis=1)
        minima[start : start + count] = np.min(_order_pvalues(u) * scale, axis=1)
    return float(np.quantile(minima, level))


def calibration_size(n: int) -> int:
    """Sample size whose calibration constant serves ``n``.

    Small sizes calibrate exactly; larger ones use the nearest point of a geometric grid,
    since the constant varies slowly with n.
    """
    if n <= _EXACT_CALIBRATION_MAX:
        return n
    steps = round(math.log(n / _EXACT_CALIBRATION_MAX) / math.log(_ANCHOR_RATIO))
    return round(_EXACT_CALIBRATION_MAX * _ANCHOR_RATIO**steps)


def _anchor_constant(size: int, level: float, replicates: int) -> float:
    key = (size, level, replicates, settings.bj_calibration_seed)
    with _threshold_lock:
        constant = _constant_cache.get(key)
    if constant is None:
        constant = _calibration_constant(size, level, replicates, settings.bj_calibration_seed)
        with _threshold_lock:
            constant = _constant_cache.setdefault(key, constant)
    return constant


def pbj_threshold(n: int, level: float = 0.05, replicates: int | None = None) -> FloatArray:
    """Per-index rejection thresholds ``c * level / (n * w_i)``.

    The constant ``c`` is calibrated by Monte-Carlo under the null so that the family-wise
    false-rejection rate is ``level`` (see ``calibration_size``). Results are memoized per
    (n, level) and returned read-only. Calibration runs outside the cache lock; when two
    threads race on one key the first stored array wins.

    Raises:
        ProbabilityDomainError: If ``level`` is not in (0, 1).
        ValueError: If ``n < 1``.
    """
    if not 0.0 < level < 1.0:
        raise ProbabilityDomainError(f"level must lie in (0, 1), got {level}")
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    replicates = replicates or settings.bj_calibration_replicates
    key = (n, level, replicates, settings.bj_calibration_seed)
    with _threshold_lock:
        cached = _threshold_cache.get(key)
    if cached is not None:
        return cached
    constant = _anchor_constant(calibration_size(n), level, replicates)
    logger.debug("BJ constant %.4f for n=%d level=%.3f", constant, n, level)
    computed = constant * level / (n * tail_weights(n))
    computed.flags.writeable = False
    with _threshold_lock:
        return _threshold_cache.setdefault(key, computed)


def _plotting_u(model: DistModel, x: FloatArray) -> FloatArray:
    # Midpoint of any jump at x; equals F(x) wherever the model is continuous.
    right = np.asarray(cdf(model, x), dtype=np.float64)
    left = np.asarray(cdf(model, np.nextafter(x, -np.inf)), dtype=np.float64)
    return 0.5 * (left + right)


def bj_pvalues(
    wet: npt.ArrayLike, model: DistModel, level: float = 0.05, threshold: FloatArray | None = None
) -> GofProfile:
    """Goodness-of-fit profile of ``model`` on the sorted sample.

    ``threshold`` takes precomputed ``pbj_threshold(n, level)`` values, so worker processes
    need not calibrate again.

    Raises:
        ValueError: If ``wet`` is empty or ``threshold`` does not hold one value per observation.
    """
    x = np.sort(np.asarray(wet, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("cannot test goodness of fit on an empty sample")
    if threshold is None:
        threshold = pbj_threshold(x.size, level)
    elif threshold.shape != x.shape:
        raise ValueError(f"expected {x.size} thresholds, got {threshold.size}")
    k_values = _order_pvalues(_plotting_u(model, x))
    return GofProfile(k_values=k_values, threshold=threshold, rejected=k_values < threshold)


def rejection_indices(profile: GofProfile) -> RejectionIndices:
    """Largest rejected index in the lower half (ties at n/2 included) and smallest in the upper half."""
    rejected = np.flatnonzero(profile.rejected) + 1
    half = profile.n / 2.0
    lower = rejected[rejected <= half]
    upper = rejected[rejected > half]
    return RejectionIndices(
        i_l=int(lower.max()) if lower.size else None,
        i_u=int(upper.min()) if upper.size else None,
    )


def upper_tail_error(wet: npt.ArrayLike, model: DistModel) -> float:
    """Max absolute quantile error (mm) over plotting positions i/(n+1) with i >= ceil(0.95 n)."""
    x = np.sort(np.asarray(wet, dtype=np.float64).ravel())
    n = x.size
    start = max(1, math.ceil(round(UPPER_TAIL_FRACTION * n, 9)))
    idx = np.arange(start, n + 1)
    fitted = np.asarray(quantile(model, idx / (n + 1.0)), dtype=np.float64)
    return float(np.max(np.abs(fitted - x[idx - 1])))


def _bulk_rejected(profile: GofProfile) -> bool:
    idx = np.flatnonzero(profile.rejected) + 1
    return bool(np.any((idx > profile.n / 4.0) & (idx < 3.0 * profile.n / 4.0)))


def _passes(profile: GofProfile, start: int, stop: int) -> bool:
    """True when no index in the 1-based range [start, stop] is rejected."""
    return not profile.rejected[start - 1 : stop].any()


def _tail_patch(
    core: SegmentModel,
    profile: GofProfile,
    empirical: EmpiricalModel,
    alternate: tuple[SegmentModel, GofProfile] | None,
) -> tuple[StitchModel, RejectionIndices] | None:
    """Replace the rejected tails of ``core``, or None when no allowed category fits.

    With an EGP core (``alternate`` is the ExpW fit) a lower tail goes to ExpW where it passes
    and to the empirical model otherwise, and an upper tail goes to the empirical model. When
    both tails are rejected, ExpW patches one of them and the empirical model the other:
    ExpW-EGP-EMP if ExpW passes below ``i_l``, else EMP-EGP-ExpW if it passes from ``i_u`` on.
    An ExpW core takes empirical tails on one side only.
    """
    n = profile.n
    indices = rejection_indices(profile)
    i_l, i_u = indices.i_l, indices.i_u
    lower: SegmentModel | None = None
    upper: SegmentModel | None = None
    if i_l is not None and i_u is not None:
        if alternate is None:
            return None
        model, alt_profile = alternate
        if _passes(alt_profile, 1, i_l):
            lower, upper = model, empirical
        elif _passes(alt_profile, i_u, n):
            lower, upper = empirical, model
        else:
            return None
    elif i_l is not None:
        lower = empirical
        if alternate is not None and _passes(alternate[1], 1, i_l):
            lower = alternate[0]
    elif i_u is not None:
        upper = empirical
    p_lower = i_l / n if i_l is not None else 0.0
    p_upper = i_u / n if i_u is not None else 1.0
    return StitchModel.assemble(core, lower, upper, p_lower, p_upper), indices


def build_stitch(
    wet: npt.ArrayLike, fits: Mapping[str, FitResult], level: float = 0.05, threshold: FloatArray | None = None
) -> StitchDecision:
    """Select the Stitch-BJ model for one sample from its EGP, ExpW and empirical fits.

    EGP is kept wherever it passes and its rejected tails are patched (see ``_tail_patch``).
    ExpW becomes the core when EGP fails in the bulk or when a fully accepted ExpW has the
    smaller upper-tail error. A core failing in the bulk, or one whose rejected tails fit no
    category of ``STITCH_LABELS``, falls back to the pure empirical model.

    ``threshold`` is passed on to ``bj_pvalues``.

    Raises:
        MissingCandidateError: If ``fits`` lacks an ``egp``, ``expw`` or ``emp`` entry.
    """
    missing = [tag for tag in STITCH_CANDIDATES if tag not in fits]
    if missing:
        raise MissingCandidateError(f"stitch needs fits for {', '.join(missing)}")
    x = np.sort(np.asarray(wet, dtype=np.float64).ravel())
    egp, expw, emp = fits["egp"].model, fits["expw"].model, fits["emp"].model
    if not isinstance(emp, EmpiricalModel) or isinstance(egp, StitchModel) or isinstance(expw, StitchModel):
        raise TypeError("stitch candidates must be plain EGP, ExpW and empirical models")

    egp_profile = bj_pvalues(x, egp, level, threshold)
    expw_profile = bj_pvalues(x, expw, level, threshold)
    egp_error = upper_tail_error(x, egp)
    expw_error = upper_tail_error(x, expw)
    considered = (
        CandidateSummary("egp", egp_profile.rejection_count, egp_error),
        CandidateSummary("expw", expw_profile.rejection_count, expw_error),
    )

    patched: tuple[StitchModel, RejectionIndices] | None
    expw_clean = expw_profile.rejection_count == 0
    if egp_profile.rejection_count == 0:
        patched = StitchModel.assemble(egp), RejectionIndices(None, None)
    elif _bulk_rejected(egp_profile) or (expw_clean and expw_error < egp_error):
        patched = None if _bulk_rejected(expw_profile) else _tail_patch(expw, expw_profile, emp, alternate=None)
    else:
        patched = _tail_patch(egp, egp_profile, emp, alternate=(expw, expw_profile))
    chosen, indices = patched or (StitchModel.assemble(emp), RejectionIndices(None, None))

    logger.debug("Stitch decision %s (i_l=%s, i_u=%s, n=%d)", chosen.label, indices.i_l, indices.i_u, x.size)
    return StitchDecision(chosen=chosen, candidates_considered=considered, indices=indices, n=int(x.size))


def replacement_stats(decisions: Mapping[str, Sequence[StitchDecision]]) -> tuple[pl.DataFrame, pl.DataFrame]:
    """Summarize stitch decisions per season.

    Args:
        decisions: Season name to the decisions of every pixel in that season.

    Returns:
        ``(labels, fractions)``. ``labels`` has one row per (season, label) with ``count`` and
        ``share``. ``fractions`` has one row per (season, tail) with the number of replaced tails
        and the median and quartiles of the replaced probability fraction; tails never replaced
        produce no row.
    """
    label_rows: list[dict[str, object]] = []
    fraction_rows: list[dict[str, object]] = []
    for season, items in decisions.items():
        total = len(items)
        counts: dict[str, int] = {}
        for decision in items:
            counts[decision.label] = counts.get(decision.label, 0) + 1
        for label, count in sorted(counts.items()):
            label_rows.append({"season": season, "label": label, "count": count, "share": count / total})
        for tail in ("lower", "upper"):
            values = [
                f
                for f in (d.lower_fraction if tail == "lower" else d.upper_fraction for d in items)
                if f is not None
            ]
            if not values:
                continue
            q1, median, q3 = np.quantile(np.asarray(values), [0.25, 0.5, 0.75])
            fraction_rows.append(
                {
                    "season": season,
                    "tail": tail,
                    "n": len(values),
                    "median": float(median),
                    "q1": float(q1),
                    "q3": float(q3),
                }
            )

    labels = pl.DataFrame(
        label_rows,
        schema={"season": pl.Utf8, "label": pl.Utf8, "count": pl.Int64, "share": pl.Float64},
    )
    fractions = pl.DataFrame(
        fraction_rows,
        schema={
            "season": pl.Utf8,
            "tail": pl.Utf8,
            "n": pl.Int64,
            "median": pl.Float64,
            "q1": pl.Float64,
            "q3": pl.Float64,
        },
    )
    return labels, fractions
