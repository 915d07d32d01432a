"""ABOUTME: Wet-day distribution families, their maximum-likelihood fits and Stitch-BJ assembly.
ABOUTME: Re-exports the public evaluation, fitting and goodness-of-fit API."""

from stitchqm.distributions.fitting import (
    FAMILY_TAGS,
    FitConfig,
    FitResult,
    censored_egp_nll,
    fit_egp,
    fit_empirical,
    fit_expw,
    fit_family,
    fit_gamma,
)
from stitchqm.distributions.models import (
    DistModel,
    EGPParams,
    EmpiricalModel,
    ExpWParams,
    GammaParams,
    StitchModel,
    cdf,
    compose_label,
    empirical_quantiles,
    logpdf,
    pdf,
    quantile,
    sample,
    stitch_cdf,
    stitch_quantile,
)
from stitchqm.distributions.stitch_bj import (
    GofProfile,
    RejectionIndices,
    StitchDecision,
    bj_pvalues,
    build_stitch,
    pbj_threshold,
    rejection_indices,
    replacement_stats,
    upper_tail_error,
)

__all__ = [
    "FAMILY_TAGS",
    "DistModel",
    "EGPParams",
    "EmpiricalModel",
    "ExpWParams",
    "FitConfig",
    "FitResult",
    "GammaParams",
    "GofProfile",
    "RejectionIndices",
    "StitchDecision",
    "StitchModel",
    "bj_pvalues",
    "build_stitch",
    "cdf",
    "censored_egp_nll",
    "compose_label",
    "empirical_quantiles",
    "fit_egp",
    "fit_empirical",
    "fit_expw",
    "fit_family",
    "fit_gamma",
    "logpdf",
    "pbj_threshold",
    "pdf",
    "quantile",
    "rejection_indices",
    "replacement_stats",
    "sample",
    "stitch_cdf",
    "stitch_quantile",
    "upper_tail_error",
]
