"""ABOUTME: Stationarity stage: seasonal and intra-season monthly t-test rejection matrices.
ABOUTME: One matrix per reference dataset plus a combined matrix (model above, observations below the diagonal)."""

from collections.abc import Callable
from pathlib import Path

import polars as pl

from stitchqm.analysis.seasons import combine_triangles, month_groups, rejection_proportions, split_seasons
from stitchqm.config import RunConfig
from stitchqm.ingestion.grid import GridStack
from stitchqm.pipeline.fit import load_reference_stacks

LogFunc = Callable[[str], None]


def _write_matrices(
    name: str, per_dataset: dict[str, pl.DataFrame], out_dir: Path, log: LogFunc
) -> list[Path]:
    written = []
    frames = {**per_dataset, "combined": combine_triangles(upper=per_dataset["mod"], lower=per_dataset["obs"])}
    for suffix, frame in frames.items():
        path = out_dir / f"{name}_{suffix}.csv"
        frame.write_csv(path)
        written.append(path)
    log(f"  -> {name}: {', '.join(p.name for p in written)}")
    return written


def seasonal_matrices(stacks: dict[str, GridStack], *, welch: bool = False) -> dict[str, pl.DataFrame]:
    """Season-vs-season rejection proportions per dataset."""
    return {
        dataset: rejection_proportions({s.value: sub for s, sub in split_seasons(stack).items()}, welch=welch)
        for dataset, stack in stacks.items()
    }


def run_stationarity(cfg: RunConfig, welch: bool = False, verbose_callback: LogFunc | None = None) -> list[Path]:
    """Write seasonal and monthly rejection-proportion matrices for both reference datasets.

    Args:
        cfg: Run configuration.
        welch: Use Welch's unequal-variance test instead of the pooled Student's test.
        verbose_callback: Optional callback for progress messages.

    Returns:
        Paths of the written CSV files.
    """
    log = verbose_callback or (lambda _msg: None)
    stacks = load_reference_stacks(cfg)
    out_dir = cfg.output_dir / "stationarity"
    out_dir.mkdir(parents=True, exist_ok=True)

    log("Testing seasonal means...")
    written = _write_matrices("seasons", seasonal_matrices(stacks, welch=welch), out_dir, log)
    for season in cfg.seasons:
        log(f"Testing monthly means within {season}...")
        monthly = {
            dataset: rejection_proportions(month_groups(stack, season), welch=welch)
            for dataset, stack in stacks.items()
        }
        written.extend(_write_matrices(f"months_{season}", monthly, out_dir, log))
    return written
