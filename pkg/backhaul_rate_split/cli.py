import functools
import importlib.metadata
import logging
import sys
from pathlib import Path
from typing import Any, Callable, ParamSpec

import click
import error_helper
from error_helper import error, hint, info, success, warning

from .channels import SAMPLE_CHANNEL
from .config import (
    EXPORT_FORMATS,
    get_config,
    get_config_dir,
    qnm_options,
    region_options,
    set_config_dir,
)
from .exceptions import BackhaulRateSplitError, ConfigError
from .experiments import (
    SCHEMES,
    ExperimentSpec,
    boundary_dataset,
    corner_check_report,
    corner_checks,
    fixed_channel_regions,
    monte_carlo_dataset,
    monte_carlo_sum_rate,
    timed,
    write_dataset,
    write_manifest,
)
from .model import ChannelState, SystemConfig, load_system
from .qnm import qnm_boundary
from .region import SchemeKind, region_boundary

P = ParamSpec("P")

EXIT_FATAL = 1
EXIT_PARTIAL = 2


def handle_errors(func: Callable[P, None]) -> Callable[P, None]:
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any):
        try:
            func(*args, **kwargs)
        except KeyboardInterrupt:
            error("Aborting Execution! (KeyboardInterrupt)", prefix="")
            sys.exit(EXIT_FATAL)
        except ConfigError as e:
            error(f"invalid configuration {e}", prefix="FATAL: ")
            sys.exit(EXIT_FATAL)
        except OSError as e:
            error(f"file error ({e})", prefix="FATAL: ")
            sys.exit(EXIT_FATAL)
        except BackhaulRateSplitError as e:
            error(e, prefix="FATAL: ")
            sys.exit(EXIT_FATAL)

    return wrapper


SchemeChoices = click.Choice(SCHEMES, case_sensitive=False)
FormatChoices = click.Choice(EXPORT_FORMATS, case_sensitive=False)


@click.group(invoke_without_command=True)
@click.pass_context
@click.option(
    "-c", "--config-dir", type=click.Path(path_type=Path), help="Override path to config directory."
)
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output for debugging.")
@click.option("--show-config-dir", is_flag=True, help="Show path to config directory and exit.")
@click.option("--version", is_flag=True, help="Show version and exit.")
@handle_errors
def backhaul_rate_split(
    context: click.Context,
    config_dir: Path | None = None,
    verbose: bool = False,
    show_config_dir: bool = False,
    version: bool = False,
):
    """Rate regions of a two-cell downlink with finite-capacity backhaul links."""

    if version:
        assert __package__
        print(importlib.metadata.version(__package__.replace("_", "-")))
        context.exit()

    if config_dir:
        try:
            set_config_dir(Path(config_dir))
        except OSError as e:
            error(f"failed to create '{config_dir}' with '{e}'")
            sys.exit(EXIT_FATAL)
        if not show_config_dir:
            info(f"set configuration directory to '{config_dir}'", end="\n")
        get_config(reload=True)

    if show_config_dir:
        print(get_config_dir())
        context.exit()

    if verbose:
        logging.basicConfig(level=logging.DEBUG)
    else:
        error_helper.INFO_END = "\r"

    if context.invoked_subcommand is None:
        click.echo(context.get_help())


def experiment_options(func: Callable[P, None]) -> Callable[P, None]:
    options = (
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="System/channel/experiment JSON document.",
        ),
        click.option("--seed", type=click.IntRange(min=0), default=0, help="Random seed."),
        click.option(
            "--out",
            type=click.Path(file_okay=False, path_type=Path),
            default=Path("results"),
            show_default=True,
            help="Output directory.",
        ),
        click.option("--threads", type=click.IntRange(min=1), help="Worker threads."),
        click.option(
            "--format", "export_format", type=FormatChoices, help="Table format (default: csv)."
        ),
    )
    for option in reversed(options):
        func = option(func)
    return func


def _load_fixed_channel(config_path: Path | None, config: dict[str, Any]):
    path = config_path or SAMPLE_CHANNEL
    cfg, ch, extra = load_system(path)
    if ch is None:
        raise ConfigError(path.name, "this command needs a fixed channel 'H'")
    if config_path is None:
        info(f"using the shipped sample channel '{SAMPLE_CHANNEL.name}'", end="\n")
    # the document overrides the configured defaults
    document = {"alpha_points": config["alpha_points"], **extra}
    return cfg, ch, ExperimentSpec.from_dict(document, cfg, source=path.name)


def _export_format(export_format: str | None) -> str:
    return (export_format or get_config()["export_format"]).lower()


@backhaul_rate_split.command("region")
@experiment_options
@click.option(
    "--scheme", "schemes", type=SchemeChoices, multiple=True, help="Scheme(s) to trace."
)
@click.option("--alpha-points", type=click.IntRange(min=1), help="Rate profiles per boundary.")
@click.option(
    "--grid-points",
    type=click.IntRange(min=0),
    help="Also probe a k x k interior grid of split polygons whose corners all fail.",
)
@click.option(
    "--corner-check",
    type=click.IntRange(min=1),
    help="Compare a k x k interior split grid with the corners just beyond each FRS point.",
)
@handle_errors
def region(
    config_path: Path | None,
    seed: int,
    out: Path,
    threads: int | None,
    export_format: str | None,
    schemes: tuple[str, ...],
    alpha_points: int | None,
    grid_points: int | None,
    corner_check: int | None,
):
    """Trace rate-region boundaries on a fixed channel."""

    config = get_config()
    cfg, ch, spec = _load_fixed_channel(config_path, config)
    spec = spec.with_overrides(
        schemes=tuple(s.upper() for s in schemes) or None, alpha_points=alpha_points, seed=seed
    )
    if grid_points is not None:
        config = {**config, "grid_points": grid_points}
    opts = region_options(config, seed, threads)

    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    with timed(timings, "regions"):
        run = fixed_channel_regions(spec, cfg, ch, opts, qnm_options(config, seed, threads))

    extra = None
    if corner_check is not None:
        if "FRS" not in run.boundaries:
            hint("--corner-check needs the FRS boundary, skipping it")
        else:
            with timed(timings, "corner_checks"):
                checks = corner_checks(cfg, ch, run.boundaries["FRS"], corner_check, opts)
            extra = corner_check_report(checks)
            if counterexamples := extra["corner_counterexamples"]:
                warning(f"{counterexamples} rate pairs are feasible inside a split polygon only")

    fmt = _export_format(export_format)
    files: dict[str, str] = {}
    for name, points in run.boundaries.items():
        path = write_dataset(boundary_dataset(points), out / name, fmt)
        files[name] = path.name
        info(f"wrote {name} boundary to '{path}'", end="\n")

    write_manifest(out, "region", cfg, ch, spec, files, timings, run.failed_points, extra)
    _finish(run.failed_points, "boundary points")


@backhaul_rate_split.command("montecarlo")
@experiment_options
@click.option("--samples", type=click.IntRange(min=1), help="Channel samples per cell.")
@handle_errors
def montecarlo(
    config_path: Path | None,
    seed: int,
    out: Path,
    threads: int | None,
    export_format: str | None,
    samples: int | None,
):
    """Average maximum sum rate over Rayleigh fading channels."""

    config = get_config()
    cfg: SystemConfig | None = None
    if config_path is not None:
        cfg, ch, extra = load_system(config_path)
        if ch is not None:
            hint("the fixed channel 'H' is ignored by montecarlo")
        spec = ExperimentSpec.from_dict(extra, cfg, source=config_path.name)
    else:
        spec = ExperimentSpec()
    spec = spec.with_overrides(samples=samples, seed=seed)

    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    cells = len(spec.snr_db) * len(spec.c_list)
    info(f"running {cells} cells with {spec.samples} samples each ...", end="\n")
    with timed(timings, "montecarlo"):
        result = monte_carlo_sum_rate(spec, region_options(config, seed, threads))

    fmt = _export_format(export_format)
    path = write_dataset(monte_carlo_dataset(result), out / "montecarlo", fmt)
    info(f"wrote averages to '{path}'", end="\n")
    files = {"montecarlo": path.name}
    write_manifest(out, "montecarlo", cfg, None, spec, files, timings, result.skipped)
    _finish(result.skipped, "samples")


@backhaul_rate_split.command("qnm")
@experiment_options
@click.option("--alpha-points", type=click.IntRange(min=1), help="Rate profiles per boundary.")
@click.option(
    "--warm-start/--no-warm-start",
    default=True,
    show_default=True,
    help="Seed each profile with the network MIMO beamformers.",
)
@handle_errors
def qnm(
    config_path: Path | None,
    seed: int,
    out: Path,
    threads: int | None,
    export_format: str | None,
    alpha_points: int | None,
    warm_start: bool,
):
    """Trace the quantized network MIMO boundary on a fixed channel."""

    config = get_config()
    cfg, ch, spec = _load_fixed_channel(config_path, config)
    spec = spec.with_overrides(schemes=("QNM",), alpha_points=alpha_points, seed=seed)
    alphas = spec.alpha_grid

    out.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    with timed(timings, "qnm"):
        warm_starts = None
        if warm_start:
            warm_starts = _nm_warm_starts(cfg, ch, alphas, config, seed, threads)
        points = qnm_boundary(cfg, ch, alphas, qnm_options(config, seed, threads), warm_starts)

    path = write_dataset(boundary_dataset(points), out / "QNM", _export_format(export_format))
    info(f"wrote QNM boundary to '{path}'", end="\n")
    failed = sum(1 for point in points if not point.feasible)
    write_manifest(out, "qnm", cfg, ch, spec, {"QNM": path.name}, timings, failed)
    _finish(failed, "rate profiles without a nonzero design")


def _nm_warm_starts(
    cfg: SystemConfig,
    ch: ChannelState,
    alphas: Any,
    config: dict[str, Any],
    seed: int,
    threads: int | None,
):
    points = region_boundary(cfg, ch, SchemeKind.NM, alphas, region_options(config, seed, threads))
    return [point.bf if point.r > 0 else None for point in points]


def _finish(failures: int, what: str):
    if failures:
        warning(f"finished with {failures} failed {what}")
        sys.exit(EXIT_PARTIAL)
    success("done!")
