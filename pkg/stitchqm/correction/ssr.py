"""ABOUTME: Singularity Stochastic Removal and the SSR-extended quantile-mapping transfer.
ABOUTME: Jitters sub-threshold days, maps them through model-ref cdf and obs-ref inverse, re-zeroes."""

import logging
from collections.abc import Sequence
from typing import Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from stitchqm.distributions.models import DistModel, FloatArray, cdf, quantile
from stitchqm.exceptions import InsufficientSampleError, ProbabilityDomainError

logger = logging.getLogger(__name__)

ThresholdMode = Literal["common_threshold", "dataset_minimum"]


class SSRConfig(BaseModel):
    """Threshold and randomness settings of the SSR procedure."""

    model_config = ConfigDict(frozen=True)

    threshold_mm: float = Field(default=1.0, gt=0)
    seed: int = 0
    mode: ThresholdMode = "common_threshold"


class TransferFunction(BaseModel):
    """Reference-period transfer of one pixel-season.

    ``mod_model`` and ``obs_model`` are the wet-day models of the model and observation
    references; None means that reference had no wet days.
    """

    model_config = ConfigDict(frozen=True)

    mod_model: DistModel | None
    obs_model: DistModel | None
    alpha_mod: float = Field(ge=0, le=1)
    alpha_obs: float = Field(ge=0, le=1)
    threshold_mm: float = Field(gt=0)
    p_cap: float = Field(default=1.0, gt=0, le=1)
    zero_dry_obs: bool = False


def resolve_threshold(cfg: SSRConfig, *series: npt.ArrayLike) -> float:
    """Wet-day threshold for a run.

    ``common_threshold`` uses ``cfg.threshold_mm``; ``dataset_minimum`` the smallest positive
    value found in any of ``series``, falling back to ``cfg.threshold_mm`` when there is none.
    """
    if cfg.mode == "common_threshold":
        return cfg.threshold_mm
    smallest = np.inf
    for values in series:
        arr = np.asarray(values, dtype=np.float64)
        positive = arr[np.isfinite(arr) & (arr > 0)]
        if positive.size:
            smallest = min(smallest, float(positive.min()))
    if not np.isfinite(smallest):
        logger.warning("No positive values found; using the common threshold %.3f mm", cfg.threshold_mm)
        return cfg.threshold_mm
    return smallest


def dry_fraction(series: npt.ArrayLike, threshold_mm: float) -> float:
    """Share of valid (non-NaN) days at or below ``threshold_mm``.

    Raises:
        InsufficientSampleError: If the series holds no valid day.
    """
    arr = np.asarray(series, dtype=np.float64).ravel()
    valid = arr[~np.isnan(arr)]
    if valid.size == 0:
        raise InsufficientSampleError("no valid days to compute a dry-day fraction")
    return 1.0 - np.count_nonzero(valid > threshold_mm) / valid.size


def ssr_jitter(
    series: npt.ArrayLike,
    cfg: SSRConfig,
    stream_key: Sequence[int] = (),
    threshold_mm: float | None = None,
) -> FloatArray:
    """Replace sub-threshold days with uniforms on (0, threshold).

    The random stream is seeded from ``cfg.seed`` and ``stream_key`` (pixel and season
    codes in the pipeline) and one draw is taken per day position, so a value depends only
    on its key and position. Values at or above the threshold and NaN days pass through.
    """
    arr = np.asarray(series, dtype=np.float64)
    th = threshold_mm if threshold_mm is not None else cfg.threshold_mm
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, *stream_key]))
    u = rng.random(arr.shape)
    u[u == 0.0] = 0.5
    return np.where(arr < th, th * u, arr)


def build_transfer(
    *,
    obs_model: DistModel | None,
    alpha_obs: float,
    obs_wet_count: int,
    mod_model: DistModel | None,
    alpha_mod: float,
    threshold_mm: float,
) -> TransferFunction:
    """Bundle the reference models of one pixel-season into a transfer function.

    Args:
        obs_model: Wet-day model of the observation reference, None without wet days.
        alpha_obs: Dry-day probability of the observation reference.
        obs_wet_count: Wet days in the observation reference; sets ``p_cap``.
        mod_model: Wet-day model of the model reference, None without wet days.
        alpha_mod: Dry-day probability of the model reference.
        threshold_mm: Wet-day threshold, also the shift of both wet models.
    """
    zero_dry = alpha_obs == 0.0
    if zero_dry:
        logger.warning("Observation reference has no dry day; the inverse uses the wet model alone")
    return TransferFunction(
        mod_model=mod_model,
        obs_model=obs_model,
        alpha_mod=alpha_mod,
        alpha_obs=alpha_obs,
        threshold_mm=threshold_mm,
        p_cap=obs_wet_count / (obs_wet_count + 1.0) if obs_wet_count > 0 else 1.0,
        zero_dry_obs=zero_dry,
    )


def _extended_cdf_array(tf: TransferFunction, x: FloatArray) -> FloatArray:
    th, alpha = tf.threshold_mm, tf.alpha_mod
    out = np.full_like(x, np.nan)
    below = x < th
    out[below] = alpha / th * np.maximum(x[below], 0.0)
    above = x >= th
    if tf.mod_model is None:
        out[above] = 1.0
    else:
        wet = np.asarray(cdf(tf.mod_model, x[above]), dtype=np.float64)
        out[above] = wet * (1.0 - alpha) + alpha
    return out


def _extended_inverse_array(tf: TransferFunction, p: FloatArray) -> FloatArray:
    th, alpha = tf.threshold_mm, tf.alpha_obs
    out = np.full_like(p, np.nan)
    if alpha > 0.0:
        below = p < alpha
        out[below] = th / alpha * p[below]
    above = p >= alpha
    if tf.obs_model is None:
        out[above] = 0.0
        return out
    q = (p[above] - alpha) / (1.0 - alpha) if alpha < 1.0 else np.zeros(np.count_nonzero(above))
    q = np.where(q >= 1.0, tf.p_cap, np.clip(q, 0.0, 1.0))
    mapped = np.asarray(quantile(tf.obs_model, q), dtype=np.float64)
    out[above] = np.where(q == 0.0, th, mapped)
    return out


def extended_cdf(tf: TransferFunction, x: npt.ArrayLike) -> FloatArray | np.float64:
    """Model-reference cdf with the dry mass spread linearly over [0, threshold).

    ``x >= th`` gives ``F(x) (1 - alpha_mod) + alpha_mod``; ``x < th`` gives ``alpha_mod x / th``.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = _extended_cdf_array(tf, np.atleast_1d(arr).ravel()).reshape(arr.shape)
    return np.float64(out[()]) if out.ndim == 0 else out


def extended_inverse(tf: TransferFunction, p: npt.ArrayLike) -> FloatArray | np.float64:
    """Observation-reference inverse; the junction ``p = alpha_obs`` maps to the threshold.

    Probability 1 is evaluated at ``p_cap`` so it stays finite (the sample maximum for an
    empirical model).

    Raises:
        ProbabilityDomainError: If any probability lies outside [0, 1].
    """
    arr = np.asarray(p, dtype=np.float64)
    flat = np.atleast_1d(arr).ravel()
    if np.any((flat < 0.0) | (flat > 1.0)):
        raise ProbabilityDomainError("probabilities must lie in [0, 1]")
    out = _extended_inverse_array(tf, flat).reshape(arr.shape)
    return np.float64(out[()]) if out.ndim == 0 else out


def quantile_map(
    tf: TransferFunction,
    future: npt.ArrayLike,
    cfg: SSRConfig | None = None,
    stream_key: Sequence[int] = (),
) -> FloatArray:
    """Bias-correct a future series of one pixel-season.

    When ``cfg`` is given the series is jittered first with ``ssr_jitter``; otherwise it must
    already be jittered. Corrected values below the threshold are set to 0. Order and length
    are preserved; NaN days stay NaN.
    """
    arr = np.asarray(future, dtype=np.float64).ravel()
    if cfg is not None:
        arr = ssr_jitter(arr, cfg, stream_key, threshold_mm=tf.threshold_mm)
    out = np.full_like(arr, np.nan)
    valid = ~np.isnan(arr)
    p = np.clip(_extended_cdf_array(tf, arr[valid]), 0.0, 1.0)
    mapped = _extended_inverse_array(tf, p)
    out[valid] = np.where(mapped < tf.threshold_mm, 0.0, mapped)
    return out
