"""Newton iteration and the staged solve of the shooting system.

Stage 1 finds (a, T1) with R'(a, b, T1) = D(a, b, T1) = 0, stage 2 finds u
with Z(a, b, u, k*T1) = 0 and stage 3 polishes (a, u, T) jointly on the full
residual with b held fixed.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import (
    HipHopError,
    NewtonFailed,
    NoProgress,
    NoSignChange,
    SingularJacobian,
    SolverError,
    StageError,
)
from .flow import (
    PeriodicityReport,
    ShootingPoint,
    evaluate_maps,
    residual2_primaries,
    residual3,
    verify_periodicity,
)
from .integrator import IntegratorOptions
from .model import ProblemParams

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e14
DEFAULT_U_BRACKET = (0.05, 0.98)  # fractions of u_max
SCAN_POINTS = 16


@dataclass(frozen=True)
class NewtonOptions:
    fd_step: float = 1e-6
    tol_residual: float = 1e-10
    max_iter: int = 25
    damping: float = 0.5
    max_halvings: int = 8
    fd_floor: float = 1e-8

    def __post_init__(self):
        if not 0 < self.fd_step < 1e-2:
            raise ValueError(f"fd_step must lie in (0, 1e-2), got {self.fd_step!r}")
        if not self.tol_residual > 0:
            raise ValueError(f"tol_residual must be positive, got {self.tol_residual!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping!r}")


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class SolutionPoint:
    a: float
    b: float
    u: float
    T: float
    k: int
    report: PeriodicityReport
    converged: bool
    iterations: int
    other_u: tuple[float, ...] = ()

    @property
    def shooting_point(self) -> ShootingPoint:
        return ShootingPoint(a=self.a, b=self.b, u=self.u, T=self.T)


def fd_jacobian(
    F: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    Fx: np.ndarray,
    opts: NewtonOptions,
) -> np.ndarray:
    """Forward differences with steps relative to |x_i| and an absolute floor."""
    J = np.empty((Fx.size, x.size))
    for i in range(x.size):
        h = max(opts.fd_step * abs(x[i]), opts.fd_floor)
        xh = x.copy()
        xh[i] += h
        J[:, i] = (np.atleast_1d(F(xh)) - Fx) / (xh[i] - x[i])
    return J


def newton_solve(
    F: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    opts: Optional[NewtonOptions] = None,
) -> NewtonResult:
    """Damped Newton with a forward-difference Jacobian.

    Returns the best iterate; `converged` is set iff the infinity norm of the
    residual fell below opts.tol_residual within opts.max_iter iterations.
    """
    opts = opts or NewtonOptions()

    def G(x: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(F(x), dtype=float))

    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    Fx = G(x)
    norm = float(np.max(np.abs(Fx)))
    history = [norm]

    iteration = 0
    while norm > opts.tol_residual and iteration < opts.max_iter:
        iteration += 1
        J = fd_jacobian(G, x, Fx, opts)
        condition = np.linalg.cond(J)
        if not np.isfinite(condition) or condition > MAX_CONDITION:
            raise SingularJacobian(float(condition))
        dx = np.linalg.solve(J, -Fx)

        lam = 1.0
        for _ in range(opts.max_halvings + 1):
            x_try = x + lam * dx
            try:
                F_try = G(x_try)
            except HipHopError as e:
                logger.debug("Newton trial step lam=%.3g failed: %s", lam, e)
                lam *= opts.damping
                continue
            norm_try = float(np.max(np.abs(F_try)))
            if np.isfinite(norm_try) and norm_try < norm:
                break
            lam *= opts.damping
        else:
            raise NoProgress(iteration, norm)

        x, Fx, norm = x_try, F_try, norm_try
        history.append(norm)
        logger.debug("Newton iteration %d: residual %.3e (lam=%.3g)", iteration, norm, lam)

    return NewtonResult(
        x=x,
        converged=norm <= opts.tol_residual,
        iterations=iteration,
        residual_norm=norm,
        history=history,
    )


def _newton_stage(stage: str, F, x0, opts: NewtonOptions) -> NewtonResult:
    try:
        result = newton_solve(F, x0, opts)
    except SolverError as e:
        raise NewtonFailed(stage, getattr(e, "iteration", 0), getattr(e, "residual", float("nan")), str(e)) from e
    if not result.converged:
        raise NewtonFailed(stage, result.iterations, result.residual_norm, "iteration limit reached")
    return result


def solve_primaries(
    params: ProblemParams,
    b: float,
    guess: tuple[float, float],
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> tuple[float, float, int]:
    """(a(b), T1(b), iterations) with R'(a, b, T1) = D(a, b, T1) = 0."""
    newton_opts = newton_opts or NewtonOptions()

    def F(x):
        return residual2_primaries(params, x[0], b, x[1], integ_opts)

    result = _newton_stage("primaries", F, guess, newton_opts)
    a, T1 = float(result.x[0]), float(result.x[1])
    logger.info("Primaries at b=%.9g: a=%.12g T1=%.12g (%d iterations)", b, a, T1, result.iterations)
    return a, T1, result.iterations


def _z_at(params, a, b, T, integ_opts):
    def z(u: float) -> float:
        return float(residual3(params, ShootingPoint(a=a, b=b, u=float(np.ravel(u)[0]), T=T), integ_opts)[2])
    return z


def scan_sign_changes(fn: Callable[[float], float], lo: float, hi: float, points: int) -> list[tuple[float, float]]:
    """Sub-brackets of [lo, hi] on which fn changes sign, in increasing order."""
    grid = np.linspace(lo, hi, points)
    values = [fn(u) for u in grid]
    brackets = []
    for i in range(points - 1):
        if values[i] == 0.0:
            brackets.append((grid[i], grid[i]))
        elif values[i] * values[i + 1] < 0:
            brackets.append((grid[i], grid[i + 1]))
    if values[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    if not brackets:
        raise NoSignChange((lo, hi), (values[0], values[-1]))
    return brackets


def solve_massless_u(
    params: ProblemParams,
    a: float,
    b: float,
    T_target: float,
    bracket: Optional[tuple[float, float]] = None,
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
    scan_points: int = SCAN_POINTS,
) -> tuple[float, tuple[float, ...], int]:
    """(u, other_candidates, iterations) with Z(a, b, u, T_target) = 0.

    The bracket is scanned for sign changes; the smallest one is refined by
    bisection and then polished with Newton, never leaving its sub-bracket.
    """
    newton_opts = newton_opts or NewtonOptions()
    u_max = params.constants.u_max
    if bracket is None:
        bracket = (DEFAULT_U_BRACKET[0] * u_max, DEFAULT_U_BRACKET[1] * u_max)
    lo, hi = float(min(bracket)), float(max(bracket))
    z = _z_at(params, a, b, T_target, integ_opts)

    brackets = scan_sign_changes(z, lo, hi, scan_points)
    others = tuple(0.5 * (p + q) for p, q in brackets[1:])
    if others:
        logger.info("Z changes sign %d times on [%.6g, %.6g]; taking the smallest u", len(brackets), lo, hi)
    u_lo, u_hi = brackets[0]
    if u_lo == u_hi:
        return float(u_lo), others, 0

    u = bisect(z, u_lo, u_hi, xtol=1e-6 * (hi - lo), maxiter=100)
    iterations = 0
    try:
        result = newton_solve(z, [u], newton_opts)
        iterations = result.iterations
        polished = float(result.x[0])
        if result.converged and u_lo <= polished <= u_hi:
            u = polished
        else:
            raise SolverError("Newton polish left the bracket or did not converge")
    except SolverError as e:
        logger.debug("Falling back to bisection for u: %s", e)
        u = bisect(z, u_lo, u_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = abs(z(u))
    if residual > newton_opts.tol_residual:
        raise NewtonFailed("massless", iterations, residual, "residual above tolerance in bracket")
    return float(u), others, iterations


def polish_point(
    params: ProblemParams,
    b: float,
    guess: tuple[float, float, float],
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> tuple[float, float, float, int]:
    """Solve residual3 = 0 in (a, u, T) at fixed b."""
    newton_opts = newton_opts or NewtonOptions()

    def F(x):
        return residual3(params, ShootingPoint(a=x[0], b=b, u=x[1], T=x[2]), integ_opts)

    result = _newton_stage("polish", F, guess, newton_opts)
    a, u, T = (float(v) for v in result.x)
    return a, u, T, result.iterations


def refine_commensurate(
    params: ProblemParams,
    guess: tuple[float, float, float, float],
    theta_target: float,
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> tuple[float, float, float, float, int]:
    """Solve residual3 = 0 and theta(T) = theta_target jointly in (a, b, u, T).

    On a time-symmetric orbit theta(2T) = 2*theta(T), so the extra equation
    pins the angle gained per period; b is released to absorb it.
    """
    newton_opts = newton_opts or NewtonOptions()

    def F(x):
        values = evaluate_maps(params, ShootingPoint(a=x[0], b=x[1], u=x[2], T=x[3]), integ_opts)
        return np.array([values.rdot, values.d, values.z, values.theta - theta_target])

    result = _newton_stage("commensurate", F, guess, newton_opts)
    a, b, u, T = (float(v) for v in result.x)
    logger.info(
        "Commensurate point: a=%.12g b=%.12g u=%.12g T=%.12g (%d iterations)",
        a, b, u, T, result.iterations,
    )
    return a, b, u, T, result.iterations


def solve_point(
    params: ProblemParams,
    b: float,
    k: int,
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
    seed: Optional[SolutionPoint] = None,
    polish: bool = True,
    u_bracket: Optional[tuple[float, float]] = None,
) -> SolutionPoint:
    """Staged solve at fixed b for the period multiple k.

    Without a seed, stage 1 starts from (a_star, t1_star); with a seed (the
    previous family member) it starts from the seed's (a, T/k) and stage 2
    scans a window around the seed's u. The joint polish is skipped at b = 0,
    where d vanishes identically and the primaries are already exact.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    newton_opts = newton_opts or NewtonOptions()
    consts = params.constants

    guess = (consts.a_star, consts.t1_star) if seed is None else (seed.a, seed.T / seed.k)
    try:
        a, T1, it1 = solve_primaries(params, b, guess, newton_opts, integ_opts)
    except HipHopError as e:
        raise StageError("primaries", e) from e

    T = k * T1
    if u_bracket is None and seed is not None:
        width = 0.05 * consts.u_max
        u_bracket = (
            max(1e-3 * consts.u_max, seed.u - width),
            min(0.999 * consts.u_max, seed.u + width),
        )
    try:
        u, others, it2 = solve_massless_u(params, a, b, T, u_bracket, newton_opts, integ_opts)
    except HipHopError as e:
        raise StageError("massless", e) from e

    it3 = 0
    if polish and b != 0.0:
        try:
            a, u, T, it3 = polish_point(params, b, (a, u, T), newton_opts, integ_opts)
        except HipHopError as e:
            raise StageError("polish", e) from e

    report = verify_periodicity(params, ShootingPoint(a=a, b=b, u=u, T=T), integ_opts)
    converged = report.residual_norm <= 10.0 * newton_opts.tol_residual
    point = SolutionPoint(
        a=a, b=b, u=u, T=T, k=k,
        report=report,
        converged=converged,
        iterations=it1 + it2 + it3,
        other_u=others,
    )
    logger.info(
        "Solved b=%.9g k=%d: a=%.12g u=%.12g T=%.12g gap=%.3e",
        b, k, a, u, T, report.state_gap,
    )
    return point
