"""Rate-region boundaries by bisection along rate profiles.

A rate pair (r_1, r_2) is feasible if some split of the private rates supports it over the
backhaul and the air. The backhaul fixes how much private data each BS must carry at least,
the admissible splits form a polygon and only its vertices are handed to the conic solver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from multiprocessing.pool import AsyncResult, ThreadPool
from typing import cast

import numpy as np

from .exceptions import BackhaulRateSplitError
from .model import (
    STATIONS,
    USERS,
    BeamformerSet,
    ChannelState,
    FloatArray,
    RateSplit,
    SystemConfig,
    _check_dims,
    air_region_check,
    backhaul_check,
    other,
)
from .relaxation import (
    SolveStatus,
    SolverOptions,
    build_relaxation,
    extract_rank_one,
    solve,
)

logger = logging.getLogger(__name__)

TOL_BISECT = 1e-4
TOL_AIR = 1e-5
TOL_LOAD = 1e-9
ALPHA_POINTS = 41

Corner = tuple[float, float]


class SchemeKind(Enum):
    FRS = "FRS"
    ARS = "ARS"
    IC = "IC"
    NM = "NM"


class CornerOrder(Enum):
    PRIVATE_FIRST = "private-first"
    SHARED_FIRST = "shared-first"


@dataclass(frozen=True)
class PrivateLoad:
    """c[j]: total private rate BS j has to carry so that the backhaul of the other BS suffices."""

    c: tuple[float, float]


@dataclass(frozen=True)
class RegionOptions:
    tol_r: float = TOL_BISECT
    tol_rate: float = TOL_AIR
    corner_order: CornerOrder = CornerOrder.PRIVATE_FIRST
    grid_points: int = 0
    threads: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass(frozen=True, eq=False)
class RatePairCheck:
    feasible: bool
    split: RateSplit | None = None
    bf: BeamformerSet | None = None
    candidates_tried: int = 0
    numerical_failures: int = 0
    interior_only: bool = False


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    alpha: float
    r_pair: tuple[float, float]
    split: RateSplit
    bf: BeamformerSet
    scheme: str
    numerical_failures: int = 0
    failed: bool = False

    @property
    def r(self):
        return self.r_pair[0] + self.r_pair[1]

    @property
    def private_fraction(self):
        return self.split.private_fraction


@dataclass(frozen=True, eq=False)
class CornerProbe:
    r_pair: tuple[float, float]
    corners_feasible: bool
    interior_points: int
    interior_feasible: list[Corner]

    @property
    def counterexample(self):
        return not self.corners_feasible and bool(self.interior_feasible)


def private_load(cfg: SystemConfig, r_pair: tuple[float, float]) -> PrivateLoad:
    total = r_pair[0] + r_pair[1]
    return PrivateLoad(
        cast(tuple[float, float], tuple(max(0.0, total - cfg.c_bh[other(j)]) for j in STATIONS))
    )


def shared_only(load: PrivateLoad, r_pair: tuple[float, float]) -> bool:
    """True when neither BS has to carry private data, up to rounding of the rate sum."""

    return max(load.c) <= TOL_LOAD * max(1.0, r_pair[0] + r_pair[1])


def _split_bounds(load: PrivateLoad, r_pair: tuple[float, float]):
    c1, c2 = load.c
    return c1 + c2 - r_pair[1], r_pair[0]


def corner_points(
    load: PrivateLoad,
    r_pair: tuple[float, float],
    order: CornerOrder = CornerOrder.PRIVATE_FIRST,
) -> list[Corner]:
    """Vertices of {0 <= x <= c1, 0 <= y <= c2, c1 + c2 - r2 <= x + y <= r1}.

    x and y are the private rates of user 1 from BS 1 and BS 2, user 2 takes the rest of
    the private loads.
    """

    c1, c2 = load.c
    low, high = _split_bounds(load, r_pair)
    eps = 1e-12 * max(1.0, c1 + c2, abs(high))
    if low > high + eps or low > c1 + c2 + eps or high < -eps:
        return []
    # loads at rounding level collapse the polygon onto the all-shared split
    if shared_only(load, r_pair):
        return [(0.0, 0.0)]

    def inside(x: float, y: float):
        return (
            -eps <= x <= c1 + eps
            and -eps <= y <= c2 + eps
            and low - eps <= x + y <= high + eps
        )

    candidates = [(0.0, 0.0), (c1, 0.0), (0.0, c2), (c1, c2)]
    for level in (low, high):
        candidates += [(0.0, level), (c1, level - c1), (level, 0.0), (level - c2, c2)]

    corners: list[Corner] = []
    for x, y in candidates:
        if not inside(x, y):
            continue
        point = (min(max(x, 0.0), c1), min(max(y, 0.0), c2))
        if not any(abs(point[0] - a) <= eps and abs(point[1] - b) <= eps for a, b in corners):
            corners.append(point)

    reverse = order == CornerOrder.PRIVATE_FIRST
    return sorted(corners, key=lambda p: (p[0] + p[1], p[0]), reverse=reverse)


def _fit(rates: tuple[float, float], total: float) -> tuple[float, float]:
    # trim rounding excess so the private rates never exceed the user's total
    first, second = max(0.0, rates[0]), max(0.0, rates[1])
    if (excess := first + second - total) > 0:
        cut = min(excess, first)
        first, second = first - cut, max(0.0, second - (excess - cut))
    return first, second


def _split_at(load: PrivateLoad, r_pair: tuple[float, float], corner: Corner) -> RateSplit:
    x, y = corner
    r_p = (
        _fit((x, y), r_pair[0]),
        _fit((load.c[0] - x, load.c[1] - y), r_pair[1]),
    )
    return RateSplit(r_pair, r_p)


def _candidate_splits(
    cfg: SystemConfig,
    r_pair: tuple[float, float],
    scheme: SchemeKind,
    order: CornerOrder,
) -> list[RateSplit]:
    load = private_load(cfg, r_pair)
    match scheme:
        case SchemeKind.FRS:
            return [_split_at(load, r_pair, c) for c in corner_points(load, r_pair, order)]
        case SchemeKind.NM:
            if not shared_only(load, r_pair):
                return []
            return [RateSplit(r_pair, ((0.0, 0.0), (0.0, 0.0)))]
        case SchemeKind.IC:
            if any(r_pair[i] > cfg.c_bh[i] for i in USERS):
                return []
            return [RateSplit(r_pair, ((r_pair[0], 0.0), (0.0, r_pair[1])))]
        case SchemeKind.ARS:
            # no cross private streams: user 1 carries all of c1, user 2 all of c2
            c1, c2 = load.c
            if c1 > r_pair[0] or c2 > r_pair[1]:
                return []
            return [_split_at(load, r_pair, (c1, 0.0))]


def _try_split(
    cfg: SystemConfig, ch: ChannelState, rs: RateSplit, opts: RegionOptions
) -> tuple[BeamformerSet | None, bool]:
    """Beamformers supporting `rs`, or None. The flag reports a numerical failure."""

    if not backhaul_check(cfg, rs, tol=opts.tol_rate):
        return None, False

    prob = build_relaxation(cfg, ch, rs)
    res = solve(prob, opts.solver)
    if res.status == SolveStatus.NUMERICAL_FAILURE:
        logger.info(f"numerical failure at rates {rs.r} (private {rs.r_p}), treated as infeasible")
        return None, True
    if not res.optimal:
        return None, False

    extraction = extract_rank_one(prob, res, opts.solver)
    if not extraction.valid:
        logger.info(f"no valid beamformers recovered at rates {rs.r}, treated as infeasible")
        return None, False
    if not air_region_check(cfg, ch, extraction.bf, rs, tol=opts.tol_rate):
        logger.debug(f"recovered beamformers miss the rates {rs.r} by more than {opts.tol_rate}")
        return None, False
    return extraction.bf, False


def check_rate_pair(
    cfg: SystemConfig,
    ch: ChannelState,
    r_pair: tuple[float, float],
    scheme: SchemeKind = SchemeKind.FRS,
    opts: RegionOptions | None = None,
) -> RatePairCheck:
    opts = opts or RegionOptions()
    _check_dims(cfg, ch)
    if min(r_pair) < 0:
        raise ValueError(f"rates must be nonnegative, got {r_pair}")

    if r_pair[0] == 0 and r_pair[1] == 0:
        return RatePairCheck(True, RateSplit.zero(), BeamformerSet.zeros(cfg.n_t))
    if sum(r_pair) > sum(cfg.c_bh) + opts.tol_rate:
        return RatePairCheck(False)

    candidates = _candidate_splits(cfg, r_pair, scheme, opts.corner_order)
    failures = 0
    for index, rs in enumerate(candidates):
        bf, numerical_failure = _try_split(cfg, ch, rs, opts)
        failures += numerical_failure
        if bf is not None:
            return RatePairCheck(True, rs, bf, index + 1, failures)

    if scheme == SchemeKind.FRS and opts.grid_points > 0 and candidates:
        probe = _probe_interior(cfg, ch, r_pair, opts)
        if probe is not None:
            rs, bf = probe
            logger.warning(
                f"rate pair {r_pair} is feasible inside the split polygon but at none of its "
                "corners"
            )
            return RatePairCheck(True, rs, bf, len(candidates), failures, interior_only=True)

    return RatePairCheck(False, candidates_tried=len(candidates), numerical_failures=failures)


def _interior_grid(load: PrivateLoad, r_pair: tuple[float, float], k: int) -> list[Corner]:
    c1, c2 = load.c
    low, high = _split_bounds(load, r_pair)
    xs = np.linspace(0, c1, k + 2)[1:-1]
    ys = np.linspace(0, c2, k + 2)[1:-1]
    return [(float(x), float(y)) for x in xs for y in ys if low < x + y < high]


def _probe_interior(
    cfg: SystemConfig, ch: ChannelState, r_pair: tuple[float, float], opts: RegionOptions
) -> tuple[RateSplit, BeamformerSet] | None:
    load = private_load(cfg, r_pair)
    for point in _interior_grid(load, r_pair, opts.grid_points):
        rs = _split_at(load, r_pair, point)
        bf, _ = _try_split(cfg, ch, rs, opts)
        if bf is not None:
            return rs, bf
    return None


def probe_corner_conjecture(
    cfg: SystemConfig,
    ch: ChannelState,
    r_pair: tuple[float, float],
    grid_points: int = 10,
    opts: RegionOptions | None = None,
) -> CornerProbe:
    """Check the full k x k interior grid of the split polygon against its corners."""

    opts = opts or RegionOptions()
    corners_only = RegionOptions(
        tol_r=opts.tol_r,
        tol_rate=opts.tol_rate,
        corner_order=opts.corner_order,
        solver=opts.solver,
    )
    corners_feasible = check_rate_pair(cfg, ch, r_pair, SchemeKind.FRS, corners_only).feasible

    load = private_load(cfg, r_pair)
    grid = _interior_grid(load, r_pair, grid_points)
    feasible: list[Corner] = []
    for point in grid:
        bf, _ = _try_split(cfg, ch, _split_at(load, r_pair, point), opts)
        if bf is not None:
            feasible.append(point)

    probe = CornerProbe(r_pair, corners_feasible, len(grid), feasible)
    if probe.counterexample:
        logger.warning(
            f"corner counterexample at rates {r_pair}: {len(feasible)} of {len(grid)} interior "
            "splits feasible, all corners infeasible"
        )
    return probe


def air_sum_rate_bound(cfg: SystemConfig, ch: ChannelState, alpha: float) -> float:
    """Sum rate the profile could reach if each user had both BSs' full power to itself."""

    total_power = cfg.p[0] + cfg.p[1]
    bounds = [
        float(np.log2(1 + total_power * np.linalg.norm(ch.stacked(i)) ** 2 / cfg.noise_var))
        for i in USERS
    ]
    limit = np.inf
    if alpha > 0:
        limit = min(limit, bounds[0] / alpha)
    if alpha < 1:
        limit = min(limit, bounds[1] / (1 - alpha))
    return float(limit)


def _profile(alpha: float, r: float) -> tuple[float, float]:
    return (alpha * r, (1 - alpha) * r)


def bisect_sum_rate(
    cfg: SystemConfig,
    ch: ChannelState,
    alpha: float,
    scheme: SchemeKind = SchemeKind.FRS,
    opts: RegionOptions | None = None,
) -> BoundaryPoint:
    opts = opts or RegionOptions()
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")

    low = 0.0
    high = min(sum(cfg.c_bh), air_sum_rate_bound(cfg, ch, alpha))
    best = check_rate_pair(cfg, ch, (0.0, 0.0), scheme, opts)
    failures = 0

    if high > 0:
        top = check_rate_pair(cfg, ch, _profile(alpha, high), scheme, opts)
        failures += top.numerical_failures
        if top.feasible:
            low, best = high, top
        while high - low > opts.tol_r:
            mid = (low + high) / 2
            check = check_rate_pair(cfg, ch, _profile(alpha, mid), scheme, opts)
            failures += check.numerical_failures
            if check.feasible:
                low, best = mid, check
            else:
                high = mid

    assert best.split is not None and best.bf is not None
    logger.debug(f"{scheme.value} alpha={alpha:.4f}: sum rate {low:.6f}")
    return BoundaryPoint(
        alpha=alpha,
        r_pair=best.split.r,
        split=best.split,
        bf=best.bf,
        scheme=scheme.value,
        numerical_failures=failures,
    )


def default_alpha_grid(points: int = ALPHA_POINTS) -> FloatArray:
    if points < 1:
        raise ValueError(f"need at least one alpha point, got {points}")
    return np.linspace(0, 1, points) if points > 1 else np.array([0.5])


def region_boundary(
    cfg: SystemConfig,
    ch: ChannelState,
    scheme: SchemeKind = SchemeKind.FRS,
    alpha_grid: FloatArray | list[float] | None = None,
    opts: RegionOptions | None = None,
) -> list[BoundaryPoint]:
    opts = opts or RegionOptions()
    alphas = [float(a) for a in (default_alpha_grid() if alpha_grid is None else alpha_grid)]
    if any(not 0 <= a <= 1 for a in alphas):
        raise ValueError("alpha grid must lie in [0, 1]")

    def run(alpha: float) -> BoundaryPoint:
        try:
            return bisect_sum_rate(cfg, ch, alpha, scheme, opts)
        except (BackhaulRateSplitError, ArithmeticError) as e:
            logger.warning(f"{scheme.value} boundary point at alpha={alpha:.4f} failed ({e})")
            return BoundaryPoint(
                alpha, (0.0, 0.0), RateSplit.zero(), BeamformerSet.zeros(cfg.n_t), scheme.value,
                failed=True,
            )

    if opts.threads <= 1:
        return [run(alpha) for alpha in alphas]

    with ThreadPool(processes=opts.threads) as thread_pool:
        async_results: list[AsyncResult[BoundaryPoint]] = [
            thread_pool.apply_async(run, (alpha,)) for alpha in alphas
        ]
        return [result.get() for result in async_results]
