"""System and channel data model for the two-cell, two-user downlink with finite backhaul.

Users and base stations are indexed 0 and 1. Rates are in bits/s/Hz (log base 2), powers
are linear. Complex vectors are held as numpy arrays; the JSON documents use [re, im] pairs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Self, cast

import numpy as np
from numpy.typing import NDArray

from .exceptions import ConfigError, StructuralError

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
FloatArray = NDArray[np.float64]

TOL_RATE = 1e-7
TOL_POWER = 1e-6

USERS = (0, 1)
STATIONS = (0, 1)


def other(index: int) -> int:
    return 1 - index


@dataclass(frozen=True)
class SystemConfig:
    p: tuple[float, float]
    c_bh: tuple[float, float]
    noise_var: float
    n_t: int

    def __post_init__(self):
        if len(self.p) != 2 or len(self.c_bh) != 2:
            raise StructuralError("SystemConfig", "expected two power limits and two capacities")
        if not all(p > 0 for p in self.p):
            raise StructuralError("SystemConfig", f"power limits must be positive, got {self.p}")
        if not all(c >= 0 for c in self.c_bh):
            raise StructuralError("SystemConfig", f"backhaul must be nonnegative, got {self.c_bh}")
        if not self.noise_var > 0:
            raise StructuralError("SystemConfig", "noise variance must be positive")
        if self.n_t < 1:
            raise StructuralError("SystemConfig", f"need at least one antenna, got {self.n_t}")

    @classmethod
    def from_snr_db(
        cls, snr_db: float, c: float | tuple[float, float], n_t: int, noise_var: float = 1.0
    ) -> Self:
        power = noise_var * 10 ** (snr_db / 10)
        c_bh = (float(c), float(c)) if isinstance(c, (int, float)) else c
        return cls(p=(power, power), c_bh=c_bh, noise_var=noise_var, n_t=n_t)

    def with_backhaul(self, c: float | tuple[float, float]) -> SystemConfig:
        c_bh = (float(c), float(c)) if isinstance(c, (int, float)) else c
        return SystemConfig(p=self.p, c_bh=c_bh, noise_var=self.noise_var, n_t=self.n_t)


@dataclass(frozen=True, eq=False)
class ChannelState:
    """h[i, j] is the row vector from BS j to user i."""

    h: ComplexArray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 3 or h.shape[:2] != (2, 2) or h.shape[2] < 1:
            raise StructuralError("ChannelState", f"expected shape (2, 2, n_t), got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise StructuralError("ChannelState", "channel entries must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_complex(cls, h: Any) -> Self:
        return cls(np.asarray(h, dtype=np.complex128))

    @property
    def n_t(self) -> int:
        return self.h.shape[2]

    def stacked(self, user: int) -> ComplexArray:
        return np.concatenate((self.h[user, 0], self.h[user, 1]))


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Shared beamformers w_c[i] (length 2n_t, block j sent by BS j) and private w_p[i, j]."""

    w_c: ComplexArray
    w_p: ComplexArray

    def __post_init__(self):
        w_c = np.asarray(self.w_c, dtype=np.complex128)
        w_p = np.asarray(self.w_p, dtype=np.complex128)
        if w_p.ndim != 3 or w_p.shape[:2] != (2, 2):
            raise StructuralError("BeamformerSet", f"private beams shape {w_p.shape}")
        if w_c.shape != (2, 2 * w_p.shape[2]):
            raise StructuralError("BeamformerSet", f"shared beams shape {w_c.shape}")
        w_c.setflags(write=False)
        w_p.setflags(write=False)
        object.__setattr__(self, "w_c", w_c)
        object.__setattr__(self, "w_p", w_p)

    @classmethod
    def zeros(cls, n_t: int) -> Self:
        return cls(np.zeros((2, 2 * n_t), np.complex128), np.zeros((2, 2, n_t), np.complex128))

    @property
    def n_t(self) -> int:
        return self.w_p.shape[2]

    def shared_block(self, user: int, station: int) -> ComplexArray:
        return self.w_c[user, station * self.n_t : (station + 1) * self.n_t]

    def scaled(self, factor: float) -> BeamformerSet:
        return BeamformerSet(self.w_c * factor, self.w_p * factor)


@dataclass(frozen=True)
class RateSplit:
    """Total rates r[i] and private rates r_p[i][j] (user i, from BS j)."""

    r: tuple[float, float]
    r_p: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        components = (*self.r, *self.r_p[0], *self.r_p[1])
        if not all(np.isfinite(components)):
            raise StructuralError("RateSplit", "rates must be finite")
        if min(components) < 0:
            raise StructuralError("RateSplit", f"negative rate in {components}")
        for i in USERS:
            if sum(self.r_p[i]) > self.r[i] + 1e-12:
                raise StructuralError(
                    "RateSplit", f"private rates of user {i + 1} exceed its total rate"
                )

    @classmethod
    def zero(cls) -> Self:
        return cls((0.0, 0.0), ((0.0, 0.0), (0.0, 0.0)))

    @property
    def shared(self) -> tuple[float, float]:
        return cast(
            tuple[float, float], tuple(max(0.0, self.r[i] - sum(self.r_p[i])) for i in USERS)
        )

    @property
    def total_private(self) -> float:
        return sum(self.r_p[0]) + sum(self.r_p[1])

    @property
    def private_fraction(self) -> float:
        total = sum(self.r)
        return self.total_private / total if total > 0 else 0.0


@dataclass(frozen=True)
class AirBounds:
    """Right-hand sides of the over-the-air rate inequalities, one entry per row."""

    private: FloatArray
    private_sum: FloatArray
    total: FloatArray


def _check_dims(cfg: SystemConfig, ch: ChannelState, bf: BeamformerSet | None = None):
    if ch.n_t != cfg.n_t:
        raise StructuralError("ChannelState", f"n_t={ch.n_t} does not match config n_t={cfg.n_t}")
    if bf is not None and bf.n_t != cfg.n_t:
        raise StructuralError("BeamformerSet", f"n_t={bf.n_t} does not match config n_t={cfg.n_t}")


def interference_plus_noise(
    cfg: SystemConfig, ch: ChannelState, bf: BeamformerSet, user: int
) -> float:
    _check_dims(cfg, ch, bf)
    o = other(user)
    private_leak = sum(abs(ch.h[user, j] @ bf.w_p[o, j]) ** 2 for j in STATIONS)
    shared_leak = abs(ch.stacked(user) @ bf.w_c[o]) ** 2
    return float(cfg.noise_var + private_leak + shared_leak)


def air_rate_bounds(cfg: SystemConfig, ch: ChannelState, bf: BeamformerSet) -> AirBounds:
    _check_dims(cfg, ch, bf)
    private = np.zeros((2, 2))
    private_sum = np.zeros(2)
    total = np.zeros(2)
    for i in USERS:
        sigma_i = interference_plus_noise(cfg, ch, bf, i)
        gains = np.array([abs(ch.h[i, j] @ bf.w_p[i, j]) ** 2 for j in STATIONS])
        shared_gain = abs(ch.stacked(i) @ bf.w_c[i]) ** 2
        private[i] = np.log2(1 + gains / sigma_i)
        private_sum[i] = np.log2(1 + gains.sum() / sigma_i)
        total[i] = np.log2(1 + (shared_gain + gains.sum()) / sigma_i)
    return AirBounds(private, private_sum, total)


def air_region_check(
    cfg: SystemConfig,
    ch: ChannelState,
    bf: BeamformerSet,
    rs: RateSplit,
    tol: float = TOL_RATE,
) -> bool:
    powers = power_usage(bf)
    if np.any(powers > np.asarray(cfg.p) + TOL_POWER):
        logger.debug(f"beamformers exceed power limits {cfg.p} with {powers}")
        return False

    bounds = air_rate_bounds(cfg, ch, bf)
    for i in USERS:
        for j in STATIONS:
            if rs.r_p[i][j] > bounds.private[i, j] + tol:
                return False
        if sum(rs.r_p[i]) > bounds.private_sum[i] + tol:
            return False
        if rs.r[i] > bounds.total[i] + tol:
            return False
    return True


def backhaul_check(cfg: SystemConfig, rs: RateSplit, tol: float = TOL_RATE) -> bool:
    total = sum(rs.r)
    for j in STATIONS:
        # BS j carries everything except the private data of the other station
        load = total - sum(rs.r_p[i][other(j)] for i in USERS)
        if load > cfg.c_bh[j] + tol:
            return False
    return total <= sum(cfg.c_bh) + tol


def power_usage(bf: BeamformerSet) -> FloatArray:
    return np.array(
        [
            sum(
                np.linalg.norm(bf.shared_block(i, j)) ** 2 + np.linalg.norm(bf.w_p[i, j]) ** 2
                for i in USERS
            )
            for j in STATIONS
        ]
    )


def load_system(path: Path) -> tuple[SystemConfig, ChannelState | None, dict[str, Any]]:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(Path(path).name, f"invalid JSON ({e})") from e
    if not isinstance(document, dict):
        raise ConfigError(Path(path).name, "top level must be an object")
    return system_from_dict(cast(dict[str, Any], document), source=Path(path).name)


def system_from_dict(
    document: dict[str, Any], source: str = "config"
) -> tuple[SystemConfig, ChannelState | None, dict[str, Any]]:
    """Parse the shared JSON schema, returning the remaining (experiment) keys untouched."""

    document = dict(document)
    try:
        n_t = int(document.pop("nt"))
        noise_var = float(document.pop("sigma2", 1.0))
        p = tuple(float(value) for value in document.pop("P"))
        c = tuple(float(value) for value in document.pop("C"))
        h = document.pop("H", None)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(source, f"missing or malformed system entry ({e})") from e

    try:
        cfg = SystemConfig(
            p=cast(tuple[float, float], p),
            c_bh=cast(tuple[float, float], c),
            noise_var=noise_var,
            n_t=n_t,
        )
    except StructuralError as e:
        raise ConfigError(source, str(e)) from e

    channel = None
    if h is not None:
        try:
            pairs = np.asarray(h, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise ConfigError(source, f"malformed channel 'H' ({e})") from e
        if pairs.shape != (2, 2, n_t, 2):
            raise ConfigError(
                source, f"'H' must have shape (2, 2, {n_t}, 2) of [re, im], got {pairs.shape}"
            )
        channel = ChannelState(pairs[..., 0] + 1j * pairs[..., 1])

    return cfg, channel, document


def system_to_dict(cfg: SystemConfig, ch: ChannelState | None = None) -> dict[str, Any]:
    document: dict[str, Any] = {
        "nt": cfg.n_t,
        "sigma2": cfg.noise_var,
        "P": list(cfg.p),
        "C": list(cfg.c_bh),
    }
    if ch is not None:
        document["H"] = complex_to_pairs(ch.h)
    return document


def complex_to_pairs(values: ComplexArray) -> Any:
    return np.stack((values.real, values.imag), axis=-1).tolist()
