"""Experiment drivers: fixed-channel region comparisons, Monte Carlo sum-rate sweeps, exports."""

from __future__ import annotations

import importlib.metadata
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from multiprocessing.pool import AsyncResult, ThreadPool
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np
import tablib

from .channels import FadingModel
from .exceptions import BackhaulRateSplitError, ConfigError
from .model import ChannelState, SystemConfig, system_to_dict
from .qnm import QnmOptions, QnmPoint, qnm_boundary
from .region import (
    ALPHA_POINTS,
    BoundaryPoint,
    CornerProbe,
    RegionOptions,
    SchemeKind,
    bisect_sum_rate,
    default_alpha_grid,
    probe_corner_conjecture,
    region_boundary,
)

logger = logging.getLogger(__name__)

BOUNDARY_HEADERS = (
    "alpha",
    "r1",
    "r2",
    "r11p",
    "r12p",
    "r21p",
    "r22p",
    "private_fraction",
    "scheme",
)
MONTE_CARLO_HEADERS = (
    "snr_db",
    "C",
    "mean_sum_rate",
    "mean_private_fraction",
    "samples",
    "skipped",
)
SCHEMES = ("FRS", "ARS", "IC", "NM", "QNM")
EXPORT_FORMATS = ("csv", "xlsx", "ods")
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class ExperimentSpec:
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    c_list: tuple[float, ...] = (1.0, 5.0, 10.0)
    eps: float = 0.1
    n_t: int = 2
    samples: int = 100
    schemes: tuple[str, ...] = ("FRS", "ARS", "IC", "NM")
    alpha_points: int = ALPHA_POINTS
    sum_rate_only: bool = False
    noise_var: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("experiment", f"need at least one sample, got {self.samples}")
        if self.alpha_points < 1:
            raise ConfigError(
                "experiment", f"need at least one alpha point, got {self.alpha_points}"
            )
        if unknown := set(self.schemes) - set(SCHEMES):
            raise ConfigError("experiment", f"unknown schemes {sorted(unknown)}")
        if not self.eps >= 0:
            raise ConfigError("experiment", f"cross-link variance must be >= 0, got {self.eps}")
        if any(c < 0 for c in self.c_list):
            raise ConfigError(
                "experiment", f"backhaul capacities must be >= 0, got {self.c_list}"
            )

    @classmethod
    def from_dict(
        cls, document: dict[str, Any], cfg: SystemConfig | None = None, source: str = "config"
    ):
        """Build from the experiment keys of a system document (what `system_from_dict` leaves)."""

        document = dict(document)
        kwargs: dict[str, Any] = {}
        if cfg is not None:
            kwargs |= {"n_t": cfg.n_t, "noise_var": cfg.noise_var}
        try:
            if "snr_db" in document:
                kwargs["snr_db"] = tuple(float(v) for v in document.pop("snr_db"))
            if "C_list" in document:
                kwargs["c_list"] = tuple(float(v) for v in document.pop("C_list"))
            if "eps" in document:
                kwargs["eps"] = float(document.pop("eps"))
            if "samples" in document:
                kwargs["samples"] = int(document.pop("samples"))
            if "schemes" in document:
                kwargs["schemes"] = tuple(str(v).upper() for v in document.pop("schemes"))
            if "alpha_points" in document:
                kwargs["alpha_points"] = int(document.pop("alpha_points"))
            if "sum_rate_only" in document:
                kwargs["sum_rate_only"] = bool(document.pop("sum_rate_only"))
        except (TypeError, ValueError) as e:
            raise ConfigError(source, f"malformed experiment entry ({e})") from e

        for key in document:
            logger.warning(f"ignoring unknown experiment key '{key}' in {source}")
        try:
            return cls(**kwargs)
        except ConfigError as e:
            raise ConfigError(source, e.message) from e

    def with_overrides(self, **overrides: Any) -> ExperimentSpec:
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @property
    def alpha_grid(self):
        return np.array([0.5]) if self.sum_rate_only else default_alpha_grid(self.alpha_points)


@dataclass(frozen=True)
class MonteCarloRow:
    snr_db: float
    c: float
    mean_sum_rate: float
    mean_private_fraction: float
    samples: int
    skipped: int


@dataclass(frozen=True)
class MonteCarloResult:
    rows: list[MonteCarloRow]
    seed: int

    @property
    def skipped(self):
        return sum(row.skipped for row in self.rows)


@dataclass(frozen=True, eq=False)
class RegionRun:
    boundaries: dict[str, list[BoundaryPoint] | list[QnmPoint]] = field(default_factory=dict)

    @property
    def failed_points(self):
        return sum(
            1
            for points in self.boundaries.values()
            for point in points
            if isinstance(point, BoundaryPoint) and point.failed
        )


def _sample_sum_rate(
    cfg: SystemConfig, ch: ChannelState, opts: RegionOptions
) -> tuple[float, float] | None:
    try:
        point = bisect_sum_rate(cfg, ch, 0.5, SchemeKind.FRS, opts)
    except (BackhaulRateSplitError, ArithmeticError) as e:
        logger.warning(f"skipping sample ({e})")
        return None
    return point.r, point.private_fraction


def monte_carlo_sum_rate(
    spec: ExperimentSpec, opts: RegionOptions | None = None
) -> MonteCarloResult:
    """Average maximum sum rate (alpha = 0.5, FRS) and private fraction per (SNR, C) cell.

    Every cell sees the same channel samples.
    """

    opts = opts or RegionOptions()
    model = FadingModel(spec.eps, spec.n_t, spec.seed)
    channels = [model.draw(index) for index in range(spec.samples)]
    # the bisections of one cell run in parallel, so each stays sequential
    sample_opts = replace(opts, threads=1)

    rows: list[MonteCarloRow] = []
    with ThreadPool(processes=max(1, opts.threads)) as thread_pool:
        for snr_db in spec.snr_db:
            for c in spec.c_list:
                cfg = SystemConfig.from_snr_db(snr_db, c, spec.n_t, spec.noise_var)
                async_results: list[AsyncResult[tuple[float, float] | None]] = [
                    thread_pool.apply_async(_sample_sum_rate, (cfg, ch, sample_opts))
                    for ch in channels
                ]
                results = [result.get() for result in async_results]
                done = [result for result in results if result is not None]
                skipped = len(results) - len(done)
                if skipped:
                    logger.warning(f"SNR {snr_db} dB, C={c}: skipped {skipped} samples")

                mean_rate = float(np.mean([r for r, _ in done])) if done else float("nan")
                mean_fraction = float(np.mean([f for _, f in done])) if done else float("nan")
                logger.info(
                    f"SNR {snr_db} dB, C={c}: mean sum rate {mean_rate:.4f}, "
                    f"private fraction {mean_fraction:.4f}"
                )
                rows.append(MonteCarloRow(snr_db, c, mean_rate, mean_fraction, len(done), skipped))

    return MonteCarloResult(rows, spec.seed)


def fixed_channel_regions(
    spec: ExperimentSpec,
    cfg: SystemConfig,
    ch: ChannelState,
    opts: RegionOptions | None = None,
    qnm_opts: QnmOptions | None = None,
) -> RegionRun:
    """Boundaries of every requested scheme on one channel. QNM starts from the NM beams."""

    opts = opts or RegionOptions()
    alphas = spec.alpha_grid
    run = RegionRun()
    for name in spec.schemes:
        if name == "QNM":
            continue
        logger.info(f"tracing {name} boundary over {len(alphas)} rate profiles")
        run.boundaries[name] = region_boundary(cfg, ch, SchemeKind(name), alphas, opts)

    if "QNM" in spec.schemes:
        nm_points = run.boundaries.get("NM")
        warm_starts = None
        if nm_points is not None:
            warm_starts = [
                point.bf if isinstance(point, BoundaryPoint) and point.r > 0 else None
                for point in nm_points
            ]
        logger.info(f"tracing QNM boundary over {len(alphas)} rate profiles")
        run.boundaries["QNM"] = qnm_boundary(cfg, ch, alphas, qnm_opts, warm_starts)

    return run


def corner_checks(
    cfg: SystemConfig,
    ch: ChannelState,
    points: Sequence[BoundaryPoint | QnmPoint],
    grid_points: int,
    opts: RegionOptions | None = None,
) -> list[CornerProbe]:
    """Interior split grids against the corners, just beyond each traced FRS boundary point."""

    opts = opts or RegionOptions()
    results: list[CornerProbe] = []
    for point in points:
        if not isinstance(point, BoundaryPoint) or point.failed:
            continue
        r = point.r + 2 * opts.tol_r
        r_pair = (point.alpha * r, (1 - point.alpha) * r)
        results.append(probe_corner_conjecture(cfg, ch, r_pair, grid_points, opts))
    return results


def corner_check_report(results: Sequence[CornerProbe]) -> dict[str, Any]:
    return {
        "corner_checks": [
            {
                "r1": check.r_pair[0],
                "r2": check.r_pair[1],
                "corners_feasible": check.corners_feasible,
                "interior_points": check.interior_points,
                "interior_feasible": len(check.interior_feasible),
            }
            for check in results
        ],
        "corner_counterexamples": sum(check.counterexample for check in results),
    }


def boundary_dataset(points: Sequence[BoundaryPoint | QnmPoint]) -> tablib.Dataset:
    dataset = tablib.Dataset(headers=list(BOUNDARY_HEADERS))
    for point in points:
        if isinstance(point, BoundaryPoint):
            r_p = point.split.r_p
            private = (r_p[0][0], r_p[0][1], r_p[1][0], r_p[1][1])
        else:
            private = (0.0, 0.0, 0.0, 0.0)
        dataset.append(
            (
                float(point.alpha),
                float(point.r_pair[0]),
                float(point.r_pair[1]),
                *(float(r) for r in private),
                float(point.private_fraction),
                point.scheme,
            )
        )
    return dataset


def monte_carlo_dataset(result: MonteCarloResult) -> tablib.Dataset:
    dataset = tablib.Dataset(headers=list(MONTE_CARLO_HEADERS))
    for row in result.rows:
        dataset.append(
            (
                float(row.snr_db),
                float(row.c),
                row.mean_sum_rate,
                row.mean_private_fraction,
                row.samples,
                row.skipped,
            )
        )
    return dataset


def write_dataset(dataset: tablib.Dataset, path: Path, export_format: str = "csv") -> Path:
    """Write `dataset` next to `path` with the suffix of `export_format`."""

    if export_format not in EXPORT_FORMATS:
        raise ConfigError("export", f"unsupported format '{export_format}'")
    path = Path(path).with_suffix(f".{export_format}")
    data = dataset.export(export_format)
    if isinstance(data, str):
        # floats go through str(), which is their shortest round-trip repr
        path.write_text(data, encoding="utf-8", newline="")
    else:
        path.write_bytes(data)
    return path


def library_version() -> str:
    assert __package__
    try:
        return importlib.metadata.version(__package__.replace("_", "-"))
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(
    out_dir: Path,
    command: str,
    cfg: SystemConfig | None,
    ch: ChannelState | None,
    spec: ExperimentSpec,
    files: dict[str, str],
    timings: dict[str, float],
    skipped: int = 0,
    extra: dict[str, Any] | None = None,
) -> Path:
    manifest = {
        "command": command,
        "version": library_version(),
        "seed": spec.seed,
        "system": system_to_dict(cfg, ch) if cfg is not None else None,
        "experiment": {
            "snr_db": list(spec.snr_db),
            "C_list": list(spec.c_list),
            "eps": spec.eps,
            "nt": spec.n_t,
            "samples": spec.samples,
            "schemes": list(spec.schemes),
            "alpha_points": spec.alpha_points,
            "sum_rate_only": spec.sum_rate_only,
        },
        "files": files,
        "timings": timings,
        "skipped": skipped,
        **(extra or {}),
    }
    path = Path(out_dir) / MANIFEST
    path.write_text(json.dumps(manifest, indent=4), encoding="utf-8")
    return path


@contextmanager
def timed(timings: dict[str, float], name: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = round(time.perf_counter() - start, 6)
