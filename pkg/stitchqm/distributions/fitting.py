"""ABOUTME: Maximum-likelihood fitting of the wet-day families.
ABOUTME: Nelder-Mead on log-parameters with seeded restarts; EGP uses a left-censored likelihood."""

import logging
from collections.abc import Callable

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, special

from stitchqm.distributions.models import (
    DistModel,
    EGPParams,
    EmpiricalModel,
    ExpWParams,
    FloatArray,
    GammaParams,
    ParametricModel,
    cdf,
    logpdf,
)
from stitchqm.exceptions import InsufficientSampleError

logger = logging.getLogger(__name__)

# Standard deviation of the restart jitter, in transformed-parameter units.
_RESTART_JITTER = 0.3
_SIMPLEX_STEP = 0.25

FAMILY_TAGS = ("gamma", "expw", "egp", "emp")


class FitConfig(BaseModel):
    """Optimizer settings shared by all maximum-likelihood fits."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default=2000, gt=0)
    tolerance: float = Field(default=1e-9, gt=0)
    restarts: int = Field(default=3, ge=0)
    censor_mm: float = Field(default=3.0, ge=0)
    shift: float = Field(default=1.0, ge=0)
    min_sample: int = Field(default=20, gt=0)
    seed: int = 0


class FitResult(BaseModel):
    """Outcome of one fit. ``neg_log_lik`` is None for the empirical model and for failed fits."""

    model_config = ConfigDict(frozen=True)

    model: DistModel
    neg_log_lik: float | None
    converged: bool
    iterations: int = Field(ge=0)
    sample_size: int = Field(ge=0)


Objective = Callable[[FloatArray], float]


def _as_wet(wet: npt.ArrayLike, cfg: FitConfig) -> FloatArray:
    arr = np.asarray(wet, dtype=np.float64).ravel()
    if arr.size < cfg.min_sample:
        raise InsufficientSampleError(f"{arr.size} wet days, at least {cfg.min_sample} required for a parametric fit")
    if np.any(~np.isfinite(arr)) or np.any(arr <= cfg.shift):
        raise ValueError(f"wet-day values must be finite and exceed the shift ({cfg.shift} mm)")
    return arr


def _minimize(objective: Objective, x0: FloatArray, cfg: FitConfig) -> tuple[FloatArray, bool, int]:
    """Run Nelder-Mead from ``x0`` and ``cfg.restarts`` jittered starts; lowest objective wins.

    Ties go to the earliest start, so identical inputs give identical results.
    """
    rng = np.random.default_rng(cfg.seed)
    starts = [x0] + [x0 + rng.normal(0.0, _RESTART_JITTER, size=x0.size) for _ in range(cfg.restarts)]

    best_x = x0
    best_f = np.inf
    best_converged = False
    best_iterations = 0
    for start in starts:
        simplex = np.vstack([start, start + _SIMPLEX_STEP * np.eye(start.size)])
        result = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iterations,
                "maxfev": 2 * cfg.max_iterations,
                "xatol": cfg.tolerance,
                "fatol": cfg.tolerance,
                "initial_simplex": simplex,
            },
        )
        if np.isfinite(result.fun) and result.fun < best_f:
            best_x = np.asarray(result.x, dtype=np.float64)
            best_f = float(result.fun)
            best_converged = bool(result.success)
            best_iterations = int(result.nit)
    return best_x, bool(best_converged and np.isfinite(best_f)), best_iterations


def _safe_mean(values: FloatArray) -> float:
    total = float(np.mean(values))
    return total if np.isfinite(total) else np.inf


def _parametric_result(model: ParametricModel, nll: float, converged: bool, iterations: int, n: int) -> FitResult:
    finite = np.isfinite(nll)
    return FitResult(
        model=model,
        neg_log_lik=nll if finite else None,
        converged=converged and finite,
        iterations=iterations,
        sample_size=n,
    )


def gamma_nll(model: GammaParams, wet: npt.ArrayLike) -> float:
    """Negative log-likelihood of a gamma model on raw wet-day values."""
    return -float(np.sum(logpdf(model, wet)))


def fit_gamma(wet: npt.ArrayLike, cfg: FitConfig | None = None) -> FitResult:
    """Gamma MLE on ``wet - shift``, started from the method of moments.

    Raises:
        InsufficientSampleError: Below ``cfg.min_sample`` wet days.
    """
    cfg = cfg or FitConfig()
    x = _as_wet(wet, cfg)
    y = x - cfg.shift
    mean, var = float(np.mean(y)), float(np.var(y))
    k0 = mean**2 / var if var > 0 else 1.0
    theta0 = var / mean if var > 0 else mean
    log_y = np.log(y)

    def objective(params: FloatArray) -> float:
        k, theta = np.exp(params)
        ll = (k - 1.0) * log_y - y / theta - special.gammaln(k) - k * np.log(theta)
        return -_safe_mean(ll) if np.isfinite(k * theta) else np.inf

    best, converged, iterations = _minimize(objective, np.log([k0, theta0]), cfg)
    k, theta = np.exp(best)
    model = GammaParams(k=float(k), theta=float(theta), shift=cfg.shift)
    return _parametric_result(model, gamma_nll(model, x), converged, iterations, x.size)


def expw_nll(model: ExpWParams, wet: npt.ArrayLike) -> float:
    """Negative log-likelihood of an exponentiated Weibull model on raw wet-day values."""
    return -float(np.sum(logpdf(model, wet)))


def _weibull_moments(y: FloatArray) -> tuple[float, float]:
    mean = float(np.mean(y))
    cv = float(np.std(y)) / mean if mean > 0 else 1.0
    k0 = cv**-1.086 if cv > 0 else 1.0
    lam0 = mean / float(special.gamma(1.0 + 1.0 / k0))
    return k0, lam0


def fit_expw(wet: npt.ArrayLike, cfg: FitConfig | None = None, fix_alpha: float | None = None) -> FitResult:
    """Exponentiated Weibull MLE on ``wet - shift`` from a Weibull moment start with alpha = 1.

    Args:
        wet: Wet-day values (mm), all above the shift.
        cfg: Optimizer settings.
        fix_alpha: Hold the exponent fixed (``1.0`` fits a plain Weibull).

    Raises:
        InsufficientSampleError: Below ``cfg.min_sample`` wet days.
    """
    cfg = cfg or FitConfig()
    x = _as_wet(wet, cfg)
    y = x - cfg.shift
    k0, lam0 = _weibull_moments(y)

    def unpack(params: FloatArray) -> tuple[float, float, float]:
        values = np.exp(params)
        alpha = fix_alpha if fix_alpha is not None else float(values[2])
        return float(values[0]), float(values[1]), alpha

    def objective(params: FloatArray) -> float:
        k, lam, alpha = unpack(params)
        if not np.isfinite(k * lam * alpha):
            return np.inf
        z = (y / lam) ** k
        with np.errstate(divide="ignore", invalid="ignore"):
            ll = (
                np.log(alpha * k / lam)
                + (k - 1.0) * np.log(y / lam)
                - z
                + (alpha - 1.0) * np.log(-np.expm1(-z))
            )
        return -_safe_mean(ll)

    x0 = np.log([k0, lam0]) if fix_alpha is not None else np.log([k0, lam0, 1.0])
    best, converged, iterations = _minimize(objective, x0, cfg)
    k, lam, alpha = unpack(best)
    model = ExpWParams(k=k, lam=lam, alpha=alpha, shift=cfg.shift)
    return _parametric_result(model, expw_nll(model, x), converged, iterations, x.size)


def censored_egp_nll(model: EGPParams, wet: npt.ArrayLike, censor: float) -> float:
    """EGP negative log-likelihood with observations at or below ``censor`` (raw mm) left-censored.

    Censored values contribute ``log F(censor)``, the others their log density.
    """
    x = np.asarray(wet, dtype=np.float64)
    censored = x <= censor
    ll = float(np.sum(logpdf(model, x[~censored])))
    n_censored = int(np.count_nonzero(censored))
    if n_censored:
        with np.errstate(divide="ignore"):
            ll += n_censored * float(np.log(cdf(model, censor)))
    return -ll


def fit_egp(wet: npt.ArrayLike, cfg: FitConfig | None = None) -> FitResult:
    """Left-censored EGP MLE with ``xi >= 0``, started from sigma = mean, xi = 0.1, kappa = 1.

    When every observation is censored the likelihood carries no shape information; the
    starting model is returned with ``converged=False``.

    Raises:
        InsufficientSampleError: Below ``cfg.min_sample`` wet days.
    """
    cfg = cfg or FitConfig()
    x = _as_wet(wet, cfg)
    y = x - cfg.shift
    censor_y = cfg.censor_mm - cfg.shift
    observed = y[x > cfg.censor_mm]
    n_censored = x.size - observed.size
    start = EGPParams(sigma=float(np.mean(y)), xi=0.1, kappa=1.0, shift=cfg.shift, censor=cfg.censor_mm)

    if observed.size == 0:
        logger.warning("All %d wet days are at or below the %.2f mm censor; EGP fit skipped", x.size, cfg.censor_mm)
        return FitResult(model=start, neg_log_lik=None, converged=False, iterations=0, sample_size=x.size)

    def objective(params: FloatArray) -> float:
        log_sigma, xi_raw, log_kappa = params
        sigma, kappa, xi = float(np.exp(log_sigma)), float(np.exp(log_kappa)), max(float(xi_raw), 0.0)
        if not np.isfinite(sigma * kappa):
            return np.inf
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if xi <= 1e-12:
                log_h = -np.log(sigma) - observed / sigma
                gpd = -np.expm1(-observed / sigma)
                gpd_censor = -np.expm1(-censor_y / sigma) if censor_y > 0 else 0.0
            else:
                log1p_term = np.log1p(xi * observed / sigma)
                log_h = -np.log(sigma) - (1.0 / xi + 1.0) * log1p_term
                gpd = -np.expm1(-log1p_term / xi)
                gpd_censor = -np.expm1(-np.log1p(xi * censor_y / sigma) / xi) if censor_y > 0 else 0.0
            ll = float(np.sum(np.log(kappa) + log_h + (kappa - 1.0) * np.log(gpd)))
            if n_censored:
                ll += n_censored * kappa * float(np.log(gpd_censor))
        total = -ll / x.size
        return total if np.isfinite(total) else np.inf

    x0 = np.array([np.log(start.sigma), start.xi, np.log(start.kappa)])
    best, converged, iterations = _minimize(objective, x0, cfg)
    model = EGPParams(
        sigma=float(np.exp(best[0])),
        xi=max(float(best[1]), 0.0),
        kappa=float(np.exp(best[2])),
        shift=cfg.shift,
        censor=cfg.censor_mm,
    )
    return _parametric_result(model, censored_egp_nll(model, x, cfg.censor_mm), converged, iterations, x.size)


def fit_empirical(wet: npt.ArrayLike) -> FitResult:
    """Empirical model over a sorted copy of ``wet``; duplicates are kept.

    Raises:
        InsufficientSampleError: If ``wet`` is empty.
    """
    arr = np.asarray(wet, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InsufficientSampleError("cannot build an empirical model from an empty sample")
    model = EmpiricalModel(sorted_sample=tuple(np.sort(arr).tolist()))
    return FitResult(model=model, neg_log_lik=None, converged=True, iterations=0, sample_size=arr.size)


def fit_family(tag: str, wet: npt.ArrayLike, cfg: FitConfig | None = None) -> FitResult:
    """Fit the family named by ``tag`` (one of ``FAMILY_TAGS``).

    Raises:
        KeyError: For an unknown tag.
    """
    if tag == "gamma":
        return fit_gamma(wet, cfg)
    if tag == "expw":
        return fit_expw(wet, cfg)
    if tag == "egp":
        return fit_egp(wet, cfg)
    if tag == "emp":
        return fit_empirical(wet)
    raise KeyError(f"Unknown family tag '{tag}'. Known: {', '.join(FAMILY_TAGS)}")
