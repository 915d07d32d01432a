"""ABOUTME: CLI entry point for stitchqm commands.
ABOUTME: Provides stationarity, fit, correct, evaluate and diagnose commands via Typer."""

from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import NoReturn

import typer
from pydantic import ValidationError
from rich.console import Console

from stitchqm.config import DATASETS, RunConfig, config_keys_help, load_run_config
from stitchqm.exceptions import (
    ConfigError,
    CsvParseError,
    DegenerateVarianceError,
    GridFormatError,
    InsufficientSampleError,
    MissingModelError,
    ModelStoreError,
    PixelOutOfRangeError,
    ProbabilityDomainError,
)
from stitchqm.logs import init_logging
from stitchqm.pipeline import run_correct, run_diagnose, run_evaluate, run_fit, run_stationarity
from stitchqm.settings import settings

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

app = typer.Typer(
    name="stitchqm",
    help="Seasonal quantile-mapping bias correction of gridded daily precipitation.",
    no_args_is_help=True,
)

# Progress and errors go to stderr; stdout only carries the written paths.
console = Console(stderr=True)

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Run config file with 'key = value' lines")
SET_OPTION = typer.Option([], "--set", "-s", help="Override a config key, KEY=VALUE (repeatable)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Show detailed output")


def _fail(code: int, label: str, error: BaseException) -> NoReturn:
    console.print(f"[red]{label}:[/] {error}")
    raise typer.Exit(code) from None


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Translate pipeline failures into the documented exit codes."""
    try:
        yield
    except (ConfigError, ValidationError) as e:
        _fail(EXIT_USAGE, "Error", e)
    except (OSError, GridFormatError, CsvParseError, ModelStoreError, MissingModelError, PixelOutOfRangeError) as e:
        _fail(EXIT_IO, "I/O error", e)
    except (InsufficientSampleError, DegenerateVarianceError, ProbabilityDomainError, FloatingPointError) as e:
        _fail(EXIT_NUMERIC, "Numerical failure", e)


def _setup(config: Path | None, sets: list[str], verbose: bool) -> tuple[RunConfig, Callable[[str], None]]:
    """Initialize logging and load the run configuration."""
    init_logging(settings.logging_config_path, level="DEBUG" if verbose else None)

    def log(msg: str) -> None:
        if verbose:
            console.print(f"[blue]{msg}[/]")

    return load_run_config(config, sets), log


def _report(paths: list[Path], label: str) -> None:
    console.print(f"[green]{label} {len(paths)} files[/]")
    for path in paths:
        typer.echo(str(path))


@app.command(epilog=config_keys_help())
def stationarity(
    config: Path = CONFIG_OPTION,
    sets: list[str] = SET_OPTION,
    welch: bool = typer.Option(False, "--welch", help="Use Welch's unequal-variance t-test"),
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Write t-test rejection-proportion matrices between seasons and between months."""
    with _exit_codes():
        cfg, log = _setup(config, sets, verbose)
        _report(run_stationarity(cfg, welch=welch, verbose_callback=log), "Wrote")


@app.command(epilog=config_keys_help())
def fit(
    config: Path = CONFIG_OPTION,
    sets: list[str] = SET_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Fit wet-day models for every pixel-season of the reference stacks."""
    with _exit_codes():
        cfg, log = _setup(config, sets, verbose)
        _report(run_fit(cfg, verbose_callback=log), "Wrote")


@app.command(epilog=config_keys_help())
def correct(
    config: Path = CONFIG_OPTION,
    sets: list[str] = SET_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Quantile-map the future model stack with every fitted model."""
    with _exit_codes():
        cfg, log = _setup(config, sets, verbose)
        _report(run_correct(cfg, verbose_callback=log), "Wrote")


@app.command(epilog=config_keys_help())
def evaluate(
    config: Path = CONFIG_OPTION,
    sets: list[str] = SET_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Score the corrected stacks against the observation validation stack."""
    with _exit_codes():
        cfg, log = _setup(config, sets, verbose)
        _report(run_evaluate(cfg, verbose_callback=log), "Wrote")


@app.command(epilog=config_keys_help())
def diagnose(
    lat_index: int = typer.Argument(..., help="Latitude index of the pixel"),
    lon_index: int = typer.Argument(..., help="Longitude index of the pixel"),
    dataset: str = typer.Option("obs", "--dataset", "-d", help="Reference dataset: obs or mod"),
    config: Path = CONFIG_OPTION,
    sets: list[str] = SET_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Write goodness-of-fit diagnostics of one pixel as JSON."""
    with _exit_codes():
        if dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {', '.join(DATASETS)}, got {dataset!r}")
        cfg, log = _setup(config, sets, verbose)
        _report([run_diagnose(cfg, lat_index, lon_index, dataset, verbose_callback=log)], "Wrote")


if __name__ == "__main__":
    app()
