"""ABOUTME: Dry-day aware bias correction.
ABOUTME: Singularity Stochastic Removal and the extended quantile-mapping transfer."""

from stitchqm.correction.ssr import (
    SSRConfig,
    TransferFunction,
    build_transfer,
    dry_fraction,
    extended_cdf,
    extended_inverse,
    quantile_map,
    resolve_threshold,
    ssr_jitter,
)

__all__ = [
    "SSRConfig",
    "TransferFunction",
    "build_transfer",
    "dry_fraction",
    "extended_cdf",
    "extended_inverse",
    "quantile_map",
    "resolve_threshold",
    "ssr_jitter",
]
