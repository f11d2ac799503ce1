"""Semidefinite relaxation of the fixed-rate power minimization.

Each beamformer w is replaced by a Hermitian PSD matrix V = w w^H. The relaxation has one row
per private stream, one per private sum, one per total rate and one per BS power limit; rows
whose SINR target is zero are trivially satisfied and are not handed to the solver.

Hermitian blocks are parametrized by their n^2 real degrees of freedom and the PSD cone is
imposed through the real embedding [[Re V, -Im V], [Im V, Re V]], so the cone program is a real
symmetric one and can be solved by cvxopt's primal-dual interior-point method.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cache
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from cvxopt import matrix, solvers
from scipy.optimize import linprog

from .exceptions import DualEvaluationError, SolverError, StructuralError
from .model import (
    STATIONS,
    TOL_POWER,
    USERS,
    BeamformerSet,
    ChannelState,
    ComplexArray,
    FloatArray,
    RateSplit,
    SystemConfig,
    _check_dims,
    complex_to_pairs,
    other,
)

logger = logging.getLogger(__name__)

TOL_RANK = 1e-6
TOL_VALIDATE = 1e-6


class Block(NamedTuple):
    """A matrix variable: the shared block of `user` (station None) or a private block."""

    user: int
    station: int | None

    def dim(self, n_t: int):
        return 2 * n_t if self.station is None else n_t

    def __str__(self):
        if self.station is None:
            return f"V{self.user + 1},c"
        return f"V{self.user + 1}{self.station + 1},p"


BLOCKS = (
    Block(0, None),
    Block(1, None),
    Block(0, 0),
    Block(0, 1),
    Block(1, 0),
    Block(1, 1),
)


class RowKind(Enum):
    PRIVATE = "private"
    PRIVATE_SUM = "private-sum"
    TOTAL = "total"
    POWER = "power"


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    """sum_b Re Tr[coeffs[b] V_b] + constant <= 0"""

    kind: RowKind
    user: int
    station: int | None
    gamma: float
    coeffs: dict[Block, ComplexArray]
    constant: float
    useful: tuple[Block, ...] = ()

    def value(self, v: dict[Block, ComplexArray]) -> float:
        return self.constant + sum(
            float(np.real(np.trace(coeff @ v[block]))) for block, coeff in self.coeffs.items()
        )

    @property
    def scale(self):
        return max(1.0, abs(self.constant))

    def __str__(self):
        station = "" if self.station is None else f", BS {self.station + 1}"
        return f"{self.kind.value} row (user {self.user + 1}{station})"


@dataclass(frozen=True, eq=False)
class SinrTargets:
    gamma_p: FloatArray
    gamma_sum_p: FloatArray
    gamma_tot: FloatArray

    @classmethod
    def from_rates(cls, rates: RateSplit):
        r_p = np.asarray(rates.r_p, dtype=np.float64)
        return cls(
            gamma_p=np.exp2(r_p) - 1,
            gamma_sum_p=np.exp2(r_p.sum(axis=1)) - 1,
            gamma_tot=np.exp2(np.asarray(rates.r, dtype=np.float64)) - 1,
        )


@dataclass(frozen=True, eq=False)
class ConicProblem:
    r_user: ComplexArray
    r_link: ComplexArray
    d_sel: FloatArray
    targets: SinrTargets
    p_lim: tuple[float, float]
    noise_var: float
    n_t: int
    rates: RateSplit

    @property
    def rows(self) -> list[ConstraintRow]:
        return _constraint_rows(self)


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: SolveStatus
    v_mats: dict[Block, ComplexArray] | None = None
    objective: float | None = None
    bf: BeamformerSet | None = None
    multipliers: dict[tuple[RowKind, int, int | None], float] = field(default_factory=dict)
    prescreened: bool = False
    certificate_ray: tuple[FloatArray, list[FloatArray]] | None = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == SolveStatus.OPTIMAL


@dataclass(frozen=True, eq=False)
class DualCertificate:
    lambda_p: FloatArray
    lambda_sum_p: FloatArray
    lambda_tot: FloatArray
    mu: FloatArray
    dual_obj: float


@dataclass(frozen=True)
class DualEvaluation:
    dual_obj: float
    max_constraint_violation: float


@dataclass(frozen=True)
class KktReport:
    total_tight: tuple[bool, bool]
    private_sum_tight: tuple[bool, bool]
    j_min_multiplier_zero: tuple[bool, bool]
    slackness: tuple[bool, bool]

    @property
    def passed(self):
        return all(
            (
                *self.total_tight,
                *self.private_sum_tight,
                *self.j_min_multiplier_zero,
                *self.slackness,
            )
        )


@dataclass(frozen=True, eq=False)
class RankOneExtraction:
    bf: BeamformerSet
    valid: bool
    rank_ratio: float
    fallback_used: bool


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 100
    tol: float = 1e-8
    tol_rank: float = TOL_RANK
    randomization_samples: int = 50
    seed: int = 0


def selector(station: int, n_t: int) -> FloatArray:
    d = np.zeros((2 * n_t, 2 * n_t))
    d[station * n_t : (station + 1) * n_t, station * n_t : (station + 1) * n_t] = np.eye(n_t)
    return d


def build_relaxation(cfg: SystemConfig, ch: ChannelState, rates: RateSplit) -> ConicProblem:
    _check_dims(cfg, ch)
    n_t = cfg.n_t
    r_user = np.array([np.outer(ch.stacked(i).conj(), ch.stacked(i)) for i in USERS])
    r_link = np.array(
        [[np.outer(ch.h[i, j].conj(), ch.h[i, j]) for j in STATIONS] for i in USERS]
    )
    d_sel = np.array([selector(j, n_t) for j in STATIONS])

    return ConicProblem(
        r_user=r_user,
        r_link=r_link,
        d_sel=d_sel,
        targets=SinrTargets.from_rates(rates),
        p_lim=cfg.p,
        noise_var=cfg.noise_var,
        n_t=n_t,
        rates=rates,
    )


def _interference(prob: ConicProblem, user: int) -> dict[Block, ComplexArray]:
    o = other(user)
    return {
        Block(o, 0): prob.r_link[user, 0],
        Block(o, 1): prob.r_link[user, 1],
        Block(o, None): prob.r_user[user],
    }


def _sinr_row(
    prob: ConicProblem,
    kind: RowKind,
    user: int,
    station: int | None,
    gamma: float,
    useful: dict[Block, ComplexArray],
):
    coeffs = {block: gamma * r for block, r in _interference(prob, user).items()}
    coeffs |= {block: -r for block, r in useful.items()}
    return ConstraintRow(
        kind, user, station, float(gamma), coeffs, float(gamma * prob.noise_var), tuple(useful)
    )


def _constraint_rows(prob: ConicProblem) -> list[ConstraintRow]:
    targets = prob.targets
    rows: list[ConstraintRow] = []
    for i in USERS:
        private_useful = {Block(i, j): prob.r_link[i, j] for j in STATIONS}
        for j in STATIONS:
            rows.append(
                _sinr_row(
                    prob,
                    RowKind.PRIVATE,
                    i,
                    j,
                    targets.gamma_p[i, j],
                    {Block(i, j): prob.r_link[i, j]},
                )
            )
        rows.append(
            _sinr_row(prob, RowKind.PRIVATE_SUM, i, None, targets.gamma_sum_p[i], private_useful)
        )
        rows.append(
            _sinr_row(
                prob,
                RowKind.TOTAL,
                i,
                None,
                targets.gamma_tot[i],
                {Block(i, None): prob.r_user[i], **private_useful},
            )
        )

    eye = np.eye(prob.n_t)
    for j in STATIONS:
        coeffs: dict[Block, ComplexArray] = {}
        for i in USERS:
            coeffs[Block(i, None)] = prob.d_sel[j].astype(np.complex128)
            coeffs[Block(i, j)] = eye.astype(np.complex128)
        rows.append(ConstraintRow(RowKind.POWER, 0, j, 0.0, coeffs, -float(prob.p_lim[j])))

    return rows


@cache
def _hermitian_basis(dim: int) -> ComplexArray:
    """Real basis of the dim x dim Hermitian matrices (diagonal, real and imaginary parts)."""

    basis: list[ComplexArray] = []
    for k in range(dim):
        e = np.zeros((dim, dim), np.complex128)
        e[k, k] = 1
        basis.append(e)
    for k in range(dim):
        for m in range(k):
            e = np.zeros((dim, dim), np.complex128)
            e[k, m] = e[m, k] = 1
            basis.append(e)
            e = np.zeros((dim, dim), np.complex128)
            e[k, m] = 1j
            e[m, k] = -1j
            basis.append(e)
    out = np.array(basis)
    out.setflags(write=False)
    return out


def real_embedding(v: ComplexArray) -> FloatArray:
    return np.block([[v.real, -v.imag], [v.imag, v.real]])


def _trace_coefficients(coeff: ComplexArray, dim: int) -> FloatArray:
    # Re Tr[A E_p] for every basis element E_p
    return np.real(np.einsum("ij,pji->p", coeff, _hermitian_basis(dim)))


def _is_zero(coeff: ComplexArray):
    return not np.any(np.abs(coeff) > 0)


def _prescreen(rows: list[ConstraintRow]) -> ConstraintRow | None:
    for row in rows:
        if row.kind == RowKind.POWER or row.gamma <= 0:
            continue
        if all(_is_zero(row.coeffs[block]) for block in row.useful):
            return row
    return None


def solve(prob: ConicProblem, opts: SolverOptions | None = None) -> SolveResult:
    opts = opts or SolverOptions()
    all_rows = prob.rows

    if (row := _prescreen(all_rows)) is not None:
        logger.debug(f"{row} has a positive target but no useful channel, declared infeasible")
        return SolveResult(SolveStatus.INFEASIBLE, prescreened=True)

    rows = [row for row in all_rows if row.kind == RowKind.POWER or row.gamma > 0]

    offsets: dict[Block, int] = {}
    n_vars = 0
    for block in BLOCKS:
        offsets[block] = n_vars
        n_vars += block.dim(prob.n_t) ** 2

    def coefficients(coeffs: dict[Block, ComplexArray]) -> FloatArray:
        out = np.zeros(n_vars)
        for block, coeff in coeffs.items():
            dim = block.dim(prob.n_t)
            out[offsets[block] : offsets[block] + dim**2] = _trace_coefficients(coeff, dim)
        return out

    c = coefficients(
        {block: np.eye(block.dim(prob.n_t), dtype=np.complex128) for block in BLOCKS}
    )
    g_l = np.array([coefficients(row.coeffs) for row in rows])
    h_l = np.array([-row.constant for row in rows])

    g_s: list[Any] = []
    h_s: list[Any] = []
    for block in BLOCKS:
        dim = block.dim(prob.n_t)
        g = np.zeros(((2 * dim) ** 2, n_vars))
        for p, e in enumerate(_hermitian_basis(dim)):
            g[:, offsets[block] + p] = -real_embedding(e).ravel(order="F")
        g_s.append(matrix(g))
        h_s.append(matrix(np.zeros((2 * dim, 2 * dim))))

    options = {
        "show_progress": False,
        "maxiters": opts.max_iters,
        "abstol": opts.tol,
        "reltol": opts.tol,
        "feastol": opts.tol,
    }
    try:
        solution = solvers.sdp(
            matrix(c.reshape(-1, 1)),
            Gl=matrix(g_l),
            hl=matrix(h_l.reshape(-1, 1)),
            Gs=g_s,
            hs=h_s,
            options=options,
        )
    except (ArithmeticError, ValueError) as e:
        logger.info(f"numerical failure in conic solver ({e})")
        return SolveResult(SolveStatus.NUMERICAL_FAILURE)

    status = solution["status"]
    iterations = int(solution.get("iterations", 0) or 0)
    if status == "primal infeasible":
        z_l = np.array(solution["zl"]).ravel()
        z_s = [np.array(z) for z in solution["zs"]]
        logger.debug(f"relaxation infeasible after {iterations} iterations")
        return SolveResult(
            SolveStatus.INFEASIBLE, certificate_ray=(z_l, z_s), iterations=iterations
        )
    if status != "optimal":
        logger.info(f"numerical failure in conic solver (status '{status}')")
        return SolveResult(SolveStatus.NUMERICAL_FAILURE, iterations=iterations)

    x = np.array(solution["x"]).ravel()
    v_mats: dict[Block, ComplexArray] = {}
    for block in BLOCKS:
        dim = block.dim(prob.n_t)
        params = x[offsets[block] : offsets[block] + dim**2]
        v_mats[block] = np.einsum("p,pij->ij", params, _hermitian_basis(dim))

    z_l = np.array(solution["zl"]).ravel()
    multipliers = {
        (row.kind, row.user, row.station): float(z) for row, z in zip(rows, z_l, strict=True)
    }
    objective = float(sum(np.real(np.trace(v)) for v in v_mats.values()))

    return SolveResult(
        SolveStatus.OPTIMAL,
        v_mats=v_mats,
        objective=objective,
        multipliers=multipliers,
        iterations=iterations,
    )


def beamformers_from_blocks(w: dict[Block, ComplexArray], n_t: int) -> BeamformerSet:
    w_c = np.array([w[Block(i, None)] for i in USERS])
    w_p = np.array([[w[Block(i, j)] for j in STATIONS] for i in USERS])
    return BeamformerSet(w_c.reshape(2, 2 * n_t), w_p.reshape(2, 2, n_t))


def _outer(w: dict[Block, ComplexArray]) -> dict[Block, ComplexArray]:
    return {block: np.outer(vector, vector.conj()) for block, vector in w.items()}


def validate_vectors(prob: ConicProblem, w: dict[Block, ComplexArray], tol=TOL_VALIDATE):
    v = _outer(w)
    for row in prob.rows:
        limit = TOL_POWER if row.kind == RowKind.POWER else tol * row.scale
        if row.value(v) > limit:
            return False
    return True


def _power_control(prob: ConicProblem, directions: dict[Block, ComplexArray]):
    """Minimum-power stream powers for fixed unit beam directions, or None if infeasible."""

    rows = prob.rows
    a_ub = np.array(
        [
            [
                float(np.real(directions[b].conj() @ row.coeffs[b] @ directions[b]))
                if b in row.coeffs
                else 0.0
                for b in BLOCKS
            ]
            for row in rows
        ]
    )
    b_ub = np.array([-row.constant for row in rows])
    result = linprog(np.ones(len(BLOCKS)), A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if result.status != 0:
        return None
    powers = np.maximum(result.x, 0.0)
    return {b: np.sqrt(powers[k]) * directions[b] for k, b in enumerate(BLOCKS)}


def extract_rank_one(
    prob: ConicProblem, res: SolveResult, opts: SolverOptions | None = None
) -> RankOneExtraction:
    opts = opts or SolverOptions()
    if not res.optimal or res.v_mats is None:
        raise SolverError(f"cannot extract beamformers from a '{res.status.value}' result")

    w: dict[Block, ComplexArray] = {}
    factors: dict[Block, ComplexArray] = {}
    rank_ratio = 0.0
    scale = max(1.0, max(float(np.real(np.trace(v))) for v in res.v_mats.values()))
    # eigenvalues at the interior-point accuracy floor are zero
    noise_floor = 10 * opts.tol * scale
    for block, v in res.v_mats.items():
        vals, vecs = np.linalg.eigh((v + v.conj().T) / 2)
        vals = np.where(vals > noise_floor, vals, 0.0)
        factors[block] = vecs * np.sqrt(vals)
        if vals[-1] <= 0:
            w[block] = np.zeros(v.shape[0], np.complex128)
            continue
        if len(vals) > 1:
            rank_ratio = max(rank_ratio, float(vals[-2] / vals[-1]))
        w[block] = np.sqrt(vals[-1]) * vecs[:, -1]

    rank_ok = rank_ratio <= opts.tol_rank
    if rank_ok and validate_vectors(prob, w):
        return RankOneExtraction(beamformers_from_blocks(w, prob.n_t), True, rank_ratio, False)

    logger.warning(
        f"rank-one extraction needs recovery (eigenvalue ratio {rank_ratio:.2e}), "
        "falling back to randomization"
    )

    def unit(vector: ComplexArray) -> ComplexArray:
        norm = np.linalg.norm(vector)
        return vector / norm if norm > 0 else vector

    candidates = [{block: unit(vector) for block, vector in w.items()}]
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.randomization_samples):
        sample: dict[Block, ComplexArray] = {}
        for block, factor in factors.items():
            xi = (rng.standard_normal(factor.shape[1]) + 1j * rng.standard_normal(factor.shape[1]))
            sample[block] = unit(factor @ xi / np.sqrt(2))
        candidates.append(sample)

    best: dict[Block, ComplexArray] | None = None
    best_power = np.inf
    for directions in candidates:
        if (scaled := _power_control(prob, directions)) is None:
            continue
        power = sum(float(np.linalg.norm(vector) ** 2) for vector in scaled.values())
        if power < best_power and validate_vectors(prob, scaled):
            best, best_power = scaled, power

    if best is None:
        logger.warning("randomization recovery found no feasible beamformers")
        return RankOneExtraction(beamformers_from_blocks(w, prob.n_t), False, rank_ratio, True)

    return RankOneExtraction(beamformers_from_blocks(best, prob.n_t), True, rank_ratio, True)


def certificate_from_result(prob: ConicProblem, res: SolveResult) -> DualCertificate:
    if not res.optimal:
        raise SolverError(f"no dual certificate for a '{res.status.value}' result")

    targets = prob.targets

    def multiplier(kind: RowKind, user: int, station: int | None, gamma: float):
        # solver rows are scaled by the target, the textbook multipliers are not
        return gamma * res.multipliers.get((kind, user, station), 0.0)

    lambda_p = np.array(
        [
            [multiplier(RowKind.PRIVATE, i, j, targets.gamma_p[i, j]) for j in STATIONS]
            for i in USERS
        ]
    )
    lambda_sum_p = np.array(
        [multiplier(RowKind.PRIVATE_SUM, i, None, targets.gamma_sum_p[i]) for i in USERS]
    )
    lambda_tot = np.array(
        [multiplier(RowKind.TOTAL, i, None, targets.gamma_tot[i]) for i in USERS]
    )
    mu = np.array([res.multipliers.get((RowKind.POWER, 0, j), 0.0) for j in STATIONS])

    return DualCertificate(
        lambda_p=lambda_p,
        lambda_sum_p=lambda_sum_p,
        lambda_tot=lambda_tot,
        mu=mu,
        dual_obj=_dual_objective(prob, lambda_p, lambda_sum_p, lambda_tot, mu),
    )


def _dual_objective(
    prob: ConicProblem,
    lambda_p: FloatArray,
    lambda_sum_p: FloatArray,
    lambda_tot: FloatArray,
    mu: FloatArray,
) -> float:
    lambdas = lambda_p.sum() + lambda_sum_p.sum() + lambda_tot.sum()
    return float(prob.noise_var * lambdas - mu @ np.asarray(prob.p_lim))


def _ratio(multiplier: float, gamma: float) -> float:
    if multiplier == 0:
        return 0.0
    return np.inf if gamma == 0 else multiplier / gamma


def _inverse_gain(h: ComplexArray, m: ComplexArray) -> float:
    """1 / (h M^-1 h^H), infinite for a zero channel."""

    try:
        quadratic = float(np.real(h @ np.linalg.solve(m, h.conj())))
    except np.linalg.LinAlgError as e:
        raise DualEvaluationError(str(e)) from e
    return np.inf if quadratic <= 0 else 1 / quadratic


def _interference_weights(cert: DualCertificate) -> FloatArray:
    # s_i: multipliers of all rows of the other user, which see user i's signals as interference
    return np.array(
        [
            cert.lambda_p[other(i)].sum() + cert.lambda_sum_p[other(i)] + cert.lambda_tot[other(i)]
            for i in USERS
        ]
    )


def _dual_gains(prob: ConicProblem, cert: DualCertificate) -> tuple[FloatArray, FloatArray]:
    """Left-hand sides of the two dual constraint families in their matrix-inverse form."""

    n_t = prob.n_t
    s = _interference_weights(cert)
    shared = np.zeros(2)
    private = np.zeros((2, 2))
    for i in USERS:
        o = other(i)
        h_i = _row_vector(prob.r_user[i])
        m = np.eye(2 * n_t) + cert.mu[0] * prob.d_sel[0] + cert.mu[1] * prob.d_sel[1]
        shared[i] = _inverse_gain(h_i, m + s[i] * prob.r_user[o])
        for j in STATIONS:
            h_ij = _row_vector(prob.r_link[i, j])
            m_j = (1 + cert.mu[j]) * np.eye(n_t) + s[i] * prob.r_link[o, j]
            private[i, j] = _inverse_gain(h_ij, m_j)
    return shared, private


def _row_vector(outer: ComplexArray) -> ComplexArray:
    """Recover h (up to a phase) from the rank-one outer product h^H h."""

    vals, vecs = np.linalg.eigh(outer)
    if vals[-1] <= 0:
        return np.zeros(outer.shape[0], np.complex128)
    return np.sqrt(vals[-1]) * vecs[:, -1].conj()


def eval_dual(prob: ConicProblem, cert: DualCertificate) -> DualEvaluation:
    multipliers = np.concatenate(
        (cert.lambda_p.ravel(), cert.lambda_sum_p, cert.lambda_tot, cert.mu)
    )
    if np.any(multipliers < 0):
        raise StructuralError("DualCertificate", "multipliers must be nonnegative")

    targets = prob.targets
    shared, private = _dual_gains(prob, cert)
    violation = 0.0
    for i in USERS:
        total_ratio = _ratio(cert.lambda_tot[i], targets.gamma_tot[i])
        violation = max(violation, total_ratio - shared[i])
        for j in STATIONS:
            ratio = (
                _ratio(cert.lambda_p[i, j], targets.gamma_p[i, j])
                + _ratio(cert.lambda_sum_p[i], targets.gamma_sum_p[i])
                + total_ratio
            )
            violation = max(violation, ratio - private[i, j])

    dual_obj = _dual_objective(prob, cert.lambda_p, cert.lambda_sum_p, cert.lambda_tot, cert.mu)
    return DualEvaluation(dual_obj=dual_obj, max_constraint_violation=float(max(violation, 0.0)))


def kkt_structure_check(
    prob: ConicProblem, res: SolveResult, cert: DualCertificate, tol: float = 1e-5
) -> KktReport:
    if not res.optimal or res.v_mats is None:
        raise SolverError(f"no optimum to check for a '{res.status.value}' result")

    v = res.v_mats
    rows = {(row.kind, row.user, row.station): row for row in prob.rows}

    def tight(kind: RowKind, user: int):
        row = rows[(kind, user, None)]
        # zero-target rows only ask for a nonnegative useful power
        if row.gamma <= 0:
            return True
        return abs(row.value(v)) <= tol * row.scale

    shared, private = _dual_gains(prob, cert)
    j_min_zero: list[bool] = []
    for i in USERS:
        with np.errstate(invalid="ignore"):
            t = private[i] - shared[i]
        if np.all(prob.targets.gamma_p[i] <= 0) or not np.all(np.isfinite(t)):
            j_min_zero.append(True)
            continue
        j_min = int(np.argmin(t))
        scale = max(1.0, float(cert.lambda_p[i].max()))
        j_min_zero.append(bool(cert.lambda_p[i, j_min] <= tol * scale))

    slackness: list[bool] = []
    for j in STATIONS:
        power_row = rows[(RowKind.POWER, 0, j)]
        slack = -power_row.value(v)
        slackness.append(bool(abs(cert.mu[j] * slack) <= tol * max(1.0, prob.p_lim[j])))

    return KktReport(
        total_tight=(tight(RowKind.TOTAL, 0), tight(RowKind.TOTAL, 1)),
        private_sum_tight=(tight(RowKind.PRIVATE_SUM, 0), tight(RowKind.PRIVATE_SUM, 1)),
        j_min_multiplier_zero=(j_min_zero[0], j_min_zero[1]),
        slackness=(slackness[0], slackness[1]),
    )


def dump_problem(prob: ConicProblem, path: Path):
    targets = prob.targets
    document = {
        "n_t": prob.n_t,
        "noise_var": prob.noise_var,
        "p_lim": list(prob.p_lim),
        "rates": {"r": list(prob.rates.r), "r_p": [list(r) for r in prob.rates.r_p]},
        "gamma_p": targets.gamma_p.tolist(),
        "gamma_sum_p": targets.gamma_sum_p.tolist(),
        "gamma_tot": targets.gamma_tot.tolist(),
        "R_user": complex_to_pairs(prob.r_user),
        "R_link": complex_to_pairs(prob.r_link),
        "D": prob.d_sel.tolist(),
    }
    Path(path).write_text(json.dumps(document, indent=4), encoding="utf-8")
