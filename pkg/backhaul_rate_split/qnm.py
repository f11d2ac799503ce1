"""Quantized network MIMO with oblivious base stations.

The central processor computes the joint signal x = w_1 s_1 + w_2 s_2 and sends each BS a
quantized version of its part over the backhaul. Quantization is modelled by a Gaussian
forward test channel x_j + q_j whose mutual information is capped by C_j. The noise q_j is
diagonal in the eigenbasis of the signal covariance C_xj = w_1j w_1j^H + w_2j w_2j^H, which has
rank two at most, so each BS has two modes with variances set from a split of its C_j bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from multiprocessing.pool import AsyncResult, ThreadPool
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .exceptions import StructuralError
from .model import (
    STATIONS,
    USERS,
    BeamformerSet,
    ChannelState,
    ComplexArray,
    FloatArray,
    SystemConfig,
    _check_dims,
    other,
)

logger = logging.getLogger(__name__)

QNM_STARTS = 20
QNM_TOL = 1e-7
SPLIT_MARGIN = 1e-3
TOL_MODE = 1e-12


@dataclass(frozen=True, eq=False)
class QnmDesign:
    """Joint precoders w[k] (length 2 n_t, block j sent by BS j) and quantization covariances."""

    w: ComplexArray
    q_cov: ComplexArray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.complex128)
        q_cov = np.asarray(self.q_cov, dtype=np.complex128)
        if w.ndim != 2 or w.shape[0] != 2 or w.shape[1] % 2:
            raise StructuralError("QnmDesign", f"precoders shape {w.shape}")
        n_t = w.shape[1] // 2
        if q_cov.shape != (2, n_t, n_t):
            raise StructuralError("QnmDesign", f"quantization covariance shape {q_cov.shape}")
        for j in STATIONS:
            if not np.allclose(q_cov[j], q_cov[j].conj().T, atol=1e-10):
                raise StructuralError("QnmDesign", f"quantization covariance {j + 1} not Hermitian")
            scale = max(1.0, float(np.abs(q_cov[j]).max()))
            if np.linalg.eigvalsh(q_cov[j])[0] < -1e-10 * scale:
                raise StructuralError("QnmDesign", f"quantization covariance {j + 1} not PSD")
        w.setflags(write=False)
        q_cov.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "q_cov", q_cov)

    @property
    def n_t(self) -> int:
        return self.w.shape[1] // 2

    def signal_block(self, station: int) -> ComplexArray:
        """n_t x 2 matrix with columns w_1j and w_2j."""

        return self.w[:, station * self.n_t : (station + 1) * self.n_t].T

    def signal_covariance(self, station: int) -> ComplexArray:
        a = self.signal_block(station)
        return a @ a.conj().T


@dataclass(frozen=True, eq=False)
class QnmEigenState:
    u1: ComplexArray
    lam: FloatArray
    q_var: FloatArray


@dataclass(frozen=True)
class QnmOptions:
    starts: int = QNM_STARTS
    tol: float = QNM_TOL
    max_iters: int = 200
    seed: int = 0
    threads: int = 1


@dataclass(frozen=True, eq=False)
class QnmPoint:
    alpha: float
    r_pair: tuple[float, float]
    design: QnmDesign
    best_start: int | None
    starts: int
    scheme: str = "QNM"

    @property
    def r(self):
        return self.r_pair[0] + self.r_pair[1]

    @property
    def feasible(self):
        return self.r > 0

    @property
    def private_fraction(self):
        return 0.0


def qnm_quantizer_nt1(q: float, c: float) -> float:
    """Quantization noise variance making the single-antenna test channel carry exactly c bits."""

    if c <= 0:
        raise ValueError("quantizer needs a positive backhaul capacity")
    return q / (2**c - 1)


def qnm_quantizer_modes(lam: FloatArray, c_j: float, bits_split: float) -> FloatArray:
    """Per-mode variances for eigenvalues `lam` when mode 0 gets `bits_split` of the C_j bits."""

    if c_j <= 0:
        raise ValueError("quantizer needs a positive backhaul capacity")
    if not 0 < bits_split < 1:
        raise ValueError(f"bit split must lie in (0, 1), got {bits_split}")
    bits = c_j * np.array([bits_split, 1 - bits_split])
    return np.asarray(lam, dtype=np.float64) / (np.exp2(bits) - 1)


def _gram_modes(a: ComplexArray) -> tuple[FloatArray, ComplexArray]:
    """Eigenvalues of a a^H (ascending) and the 2-vectors v with a v spanning its eigenvectors."""

    lam, v = np.linalg.eigh(a.conj().T @ a)
    return np.maximum(lam, 0.0), v


def _significant(lam: FloatArray) -> FloatArray:
    return lam > TOL_MODE * max(1.0, float(lam.max()))


def qnm_eigen_state(design: QnmDesign) -> QnmEigenState:
    n_t = design.n_t
    u1 = np.zeros((2, n_t, 2), np.complex128)
    lam = np.zeros((2, 2))
    q_var = np.zeros((2, 2))
    for j in STATIONS:
        a = design.signal_block(j)
        lam[j], v = _gram_modes(a)
        for i in np.flatnonzero(_significant(lam[j])):
            u1[j, :, i] = a @ v[:, i] / np.sqrt(lam[j, i])
            u = u1[j, :, i]
            q_var[j, i] = float(np.real(u.conj() @ design.q_cov[j] @ u))
    return QnmEigenState(u1=u1, lam=lam, q_var=q_var)


def qnm_backhaul_usage(design: QnmDesign) -> FloatArray:
    """Mutual information of each BS's test channel, summed over its signal modes."""

    state = qnm_eigen_state(design)
    usage = np.zeros(2)
    for j in STATIONS:
        for i in np.flatnonzero(_significant(state.lam[j])):
            if state.q_var[j, i] <= 0:
                usage[j] = np.inf
                break
            usage[j] += np.log2(1 + state.lam[j, i] / state.q_var[j, i])
    return usage


def qnm_power_usage(design: QnmDesign) -> FloatArray:
    return np.array(
        [
            float(np.real(np.trace(design.signal_covariance(j))))
            + float(np.real(np.trace(design.q_cov[j])))
            for j in STATIONS
        ]
    )


def qnm_rates(cfg: SystemConfig, ch: ChannelState, design: QnmDesign) -> tuple[float, float]:
    _check_dims(cfg, ch)
    if design.n_t != cfg.n_t:
        raise StructuralError("QnmDesign", f"n_t={design.n_t} does not match config n_t={cfg.n_t}")

    rates: list[float] = []
    for k in USERS:
        h = ch.stacked(k)
        quantization = sum(
            float(np.real(ch.h[k, j] @ design.q_cov[j] @ ch.h[k, j].conj())) for j in STATIONS
        )
        signal = abs(h @ design.w[k]) ** 2
        leak = abs(h @ design.w[other(k)]) ** 2
        rates.append(float(np.log2(1 + signal / (cfg.noise_var + leak + quantization))))
    return rates[0], rates[1]


class _Problem:
    """Smooth reformulation over the precoders and one bit split per BS.

    With the variances of each mode tied to its bits, every BS's backhaul constraint holds
    with equality and drops out of the search.
    """

    def __init__(self, cfg: SystemConfig, ch: ChannelState, alpha: float):
        self.cfg = cfg
        self.ch = ch
        self.alpha = alpha
        self.n_t = cfg.n_t
        self.n_w = 2 * 2 * cfg.n_t
        self.n_split = 2 if cfg.n_t >= 2 else 0
        self.active = np.array([c > 0 for c in cfg.c_bh])

    def variances(self, lam: FloatArray, s: FloatArray, station: int) -> FloatArray:
        """Quantization variance of each signal mode, tying the test channel to C_j bits."""

        c_j = self.cfg.c_bh[station]
        if c_j <= 0:
            return np.zeros(2)
        if self.n_t == 1:
            # a single antenna has a single signal mode, the larger one
            return np.array([0.0, qnm_quantizer_nt1(float(lam[1]), c_j)])
        return qnm_quantizer_modes(lam, c_j, float(s[station]))

    def block(self, w: ComplexArray, station: int) -> ComplexArray:
        return w[:, station * self.n_t : (station + 1) * self.n_t].T

    def masked(self, w: ComplexArray) -> ComplexArray:
        w = w.copy()
        for j in STATIONS:
            if not self.active[j]:
                w[:, j * self.n_t : (j + 1) * self.n_t] = 0
        return w

    def unpack(self, x: FloatArray) -> tuple[ComplexArray, FloatArray, float]:
        half = self.n_w
        w = (x[:half] + 1j * x[half : 2 * half]).reshape(2, 2 * self.n_t)
        if self.n_split:
            s = np.clip(x[2 * half : 2 * half + self.n_split], SPLIT_MARGIN, 1 - SPLIT_MARGIN)
        else:
            s = np.full(2, 0.5)
        return self.masked(w), s, float(x[-1])

    def pack(self, w: ComplexArray, s: FloatArray, t: float) -> FloatArray:
        flat = w.ravel()
        split = s[: self.n_split]
        return np.concatenate((flat.real, flat.imag, split, [t]))

    def _modes(self, w: ComplexArray, s: FloatArray, station: int):
        """Unit signal directions of one BS and the quantization variance along each of them."""

        a = self.block(w, station)
        lam, v = _gram_modes(a)
        used = _significant(lam) if self.active[station] else np.zeros(2, dtype=bool)
        directions = np.zeros((self.n_t, 2), np.complex128)
        for i in np.flatnonzero(used):
            directions[:, i] = a @ v[:, i] / np.sqrt(lam[i])
        return lam, directions, self.variances(lam, s, station), used

    def rates(self, w: ComplexArray, s: FloatArray) -> FloatArray:
        quantization = np.zeros(2)
        for j in STATIONS:
            _, directions, q_var, used = self._modes(w, s, j)
            for k in USERS:
                projections = np.abs(self.ch.h[k, j] @ directions[:, used]) ** 2
                quantization[k] += float(np.sum(projections * q_var[used]))
        out = np.zeros(2)
        for k in USERS:
            h = self.ch.stacked(k)
            signal = abs(h @ w[k]) ** 2
            leak = abs(h @ w[other(k)]) ** 2
            out[k] = np.log2(1 + signal / (self.cfg.noise_var + leak + quantization[k]))
        return out

    def powers(self, w: ComplexArray, s: FloatArray) -> FloatArray:
        out = np.zeros(2)
        for j in STATIONS:
            lam, _, q_var, used = self._modes(w, s, j)
            out[j] = lam.sum() + float(np.sum(q_var[used]))
        return out

    def profile_rate(self, rates: FloatArray) -> float:
        limits = [np.inf]
        if self.alpha > 0:
            limits.append(rates[0] / self.alpha)
        if self.alpha < 1:
            limits.append(rates[1] / (1 - self.alpha))
        return float(min(limits))

    def scale_to_budget(self, w: ComplexArray, s: FloatArray, fill: bool) -> ComplexArray:
        # power is quadratic in w, so one global factor restores the limits
        powers = self.powers(w, s)
        factors = [np.sqrt(self.cfg.p[j] / powers[j]) for j in STATIONS if powers[j] > 0]
        if not factors:
            return w
        factor = min(factors)
        return w * (factor if fill else min(1.0, factor))

    def design(self, w: ComplexArray, s: FloatArray) -> QnmDesign:
        q_cov = np.zeros((2, self.n_t, self.n_t), np.complex128)
        for j in STATIONS:
            _, directions, q_var, used = self._modes(w, s, j)
            for i in np.flatnonzero(used):
                u = directions[:, i]
                q_cov[j] += q_var[i] * np.outer(u, u.conj())
        return QnmDesign(w, (q_cov + q_cov.conj().transpose(0, 2, 1)) / 2)

    def evaluate(self, w: ComplexArray, s: FloatArray) -> tuple[float, ComplexArray]:
        w = self.scale_to_budget(self.masked(w), s, fill=False)
        return self.profile_rate(self.rates(w, s)), w

    def local_search(
        self, w0: ComplexArray, s0: FloatArray, opts: QnmOptions
    ) -> tuple[ComplexArray, FloatArray]:
        t0 = max(0.0, self.profile_rate(self.rates(w0, s0)))
        x0 = self.pack(w0, s0, t0)

        def margins(x: FloatArray) -> FloatArray:
            w, s, t = self.unpack(x)
            rates = self.rates(w, s)
            powers = self.powers(w, s)
            return np.array(
                [
                    rates[0] - self.alpha * t,
                    rates[1] - (1 - self.alpha) * t,
                    self.cfg.p[0] - powers[0],
                    self.cfg.p[1] - powers[1],
                ]
            )

        bounds = [(None, None)] * (2 * self.n_w)
        bounds += [(SPLIT_MARGIN, 1 - SPLIT_MARGIN)] * self.n_split
        bounds += [(0.0, None)]
        try:
            result = minimize(
                lambda x: -x[-1],
                x0,
                method="SLSQP",
                bounds=bounds,
                constraints=[{"type": "ineq", "fun": margins}],
                options={"maxiter": opts.max_iters, "ftol": opts.tol},
            )
        except (ArithmeticError, ValueError) as e:
            logger.debug(f"local search aborted ({e})")
            return w0, s0
        if not np.all(np.isfinite(result.x)):
            return w0, s0
        w, s, _ = self.unpack(result.x)
        return w, s


def qnm_optimize(
    cfg: SystemConfig,
    ch: ChannelState,
    alpha: float,
    opts: QnmOptions | None = None,
    warm_start: BeamformerSet | None = None,
) -> QnmPoint:
    opts = opts or QnmOptions()
    _check_dims(cfg, ch)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")

    problem = _Problem(cfg, ch, alpha)
    s_default = np.full(2, 0.5)
    zero = problem.design(np.zeros((2, 2 * cfg.n_t), np.complex128), s_default)
    if not problem.active.any():
        return QnmPoint(alpha, (0.0, 0.0), zero, best_start=None, starts=0)

    starts: list[ComplexArray] = []
    if warm_start is not None:
        if warm_start.n_t != cfg.n_t:
            raise StructuralError("BeamformerSet", "warm start does not match config n_t")
        starts.append(np.array(warm_start.w_c))
    for child in np.random.SeedSequence(opts.seed).spawn(opts.starts):
        rng = np.random.default_rng(child)
        shape = (2, 2 * cfg.n_t)
        starts.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def run(w0: ComplexArray) -> tuple[float, ComplexArray, FloatArray]:
        w0 = problem.scale_to_budget(problem.masked(w0), s_default, fill=True)
        best_t, best_w = problem.evaluate(w0, s_default)
        best_s = s_default
        w, s = problem.local_search(w0, s_default, opts)
        t, w = problem.evaluate(w, s)
        if t > best_t:
            best_t, best_w, best_s = t, w, s
        return best_t, best_w, best_s

    if opts.threads <= 1:
        results = [run(w0) for w0 in starts]
    else:
        with ThreadPool(processes=opts.threads) as thread_pool:
            async_results: list[AsyncResult[tuple[float, ComplexArray, FloatArray]]] = [
                thread_pool.apply_async(run, (w0,)) for w0 in starts
            ]
            results = [result.get() for result in async_results]

    offset = 0 if warm_start is None else 1
    best_index, (best_t, best_w, best_s) = -1, (0.0, zero.w, s_default)
    for index, result in enumerate(results):
        if result[0] > best_t:
            best_index, (best_t, best_w, best_s) = index - offset, result

    if best_t <= 0:
        logger.warning(f"QNM alpha={alpha:.4f}: no start reached a nonzero rate")
        return QnmPoint(alpha, (0.0, 0.0), zero, best_start=None, starts=len(starts))

    design = problem.design(best_w, best_s)
    r_pair = (alpha * best_t, (1 - alpha) * best_t)
    logger.debug(f"QNM alpha={alpha:.4f}: sum rate {best_t:.6f} (start {best_index})")
    return QnmPoint(alpha, r_pair, design, best_start=best_index, starts=len(starts))


def qnm_boundary(
    cfg: SystemConfig,
    ch: ChannelState,
    alpha_grid: Sequence[float] | FloatArray,
    opts: QnmOptions | None = None,
    warm_starts: Sequence[BeamformerSet | None] | None = None,
) -> list[QnmPoint]:
    if warm_starts is not None and len(warm_starts) != len(alpha_grid):
        raise ValueError("need one warm start (or None) per alpha")
    return [
        qnm_optimize(
            cfg, ch, float(alpha), opts, None if warm_starts is None else warm_starts[index]
        )
        for index, alpha in enumerate(alpha_grid)
    ]
