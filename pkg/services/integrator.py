"""Adaptive Runge-Kutta integration of the reduced (r, d, theta, z) system.

State vector order is (r, r', d, d', theta, z, z'). Stepping is done with
scipy's DOP853 pair (8th order, embedded 5th/3rd order error estimate, 7th
order dense output) one step at a time so that the step budget, collision
floor and step-size underflow can be reported precisely.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import bisect

from .errors import BudgetExceeded, CollisionError, NoSignChange, StiffnessSuspected
from .model import ProblemParams, ReducedState, force_f, force_g, force_h

logger = logging.getLogger(__name__)

# Right-hand-side evaluations per DOP853 step attempt.
_EVALS_PER_ATTEMPT = DOP853.n_stages

Functional = Callable[[float, ReducedState], float]


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: Optional[float] = None
    max_steps: int = 10_000_000
    r_min: Optional[float] = None  # None means params.default_r_min

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not 0 < value <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {value!r}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError(f"max_step must be positive, got {self.max_step!r}")
        if self.r_min is not None and not self.r_min > 0:
            raise ValueError(f"r_min must be positive, got {self.r_min!r}")

    def resolved_r_min(self, params: ProblemParams) -> float:
        return params.default_r_min if self.r_min is None else self.r_min


def make_rhs(params: ProblemParams, a: float, r_min: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector field of the reduced system; raises CollisionError below r_min."""

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r, rdot, d, ddot, _, z, zdot = y
        if not r > r_min:
            raise CollisionError(float(r), r_min, t=float(t))
        return np.array([
            rdot,
            force_f(params, a, r, d),
            ddot,
            force_g(params, r, d),
            a / (r * r),
            zdot,
            force_h(params, r, d, z),
        ])

    return rhs


class Trajectory:
    """Dense-output solution of the reduced system over t_span."""

    def __init__(
        self,
        params: ProblemParams,
        a: float,
        y0: np.ndarray,
        solution: OdeSolution,
        step_count: int,
        rejected_count: int,
        nfev: int,
        rhs: Callable[[float, np.ndarray], np.ndarray],
    ):
        self.params = params
        self.a = a
        self._y0 = np.array(y0, dtype=float)
        self._solution = solution
        self._rhs = rhs
        self.step_count = step_count
        self.rejected_count = rejected_count
        self.nfev = nfev
        self.ts = np.asarray(solution.ts)
        self.t_span = (float(self.ts[0]), float(self.ts[-1]))

    @property
    def t_min(self) -> float:
        return min(self.t_span)

    @property
    def t_max(self) -> float:
        return max(self.t_span)

    def _check_time(self, t: float) -> None:
        span = self.t_max - self.t_min
        slack = 1e-12 * max(1.0, span)
        if t < self.t_min - slack or t > self.t_max + slack:
            raise ValueError(f"t={t!r} lies outside the trajectory span {self.t_span}")

    def y(self, t: float) -> np.ndarray:
        self._check_time(t)
        if t == self.t_span[0]:
            return self._y0.copy()
        return np.asarray(self._solution(t), dtype=float)

    def state(self, t: float) -> ReducedState:
        return ReducedState.from_array(self.y(t))

    def derivative(self, t: float) -> np.ndarray:
        return self._rhs(t, self.y(t))

    def sample(self, times) -> np.ndarray:
        """States at the given times, shape (len(times), 7)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.array([self.y(t) for t in times])

    def step_grid(self, subdivisions: int = 4) -> np.ndarray:
        """Step boundaries with `subdivisions` equal sub-intervals per step."""
        ts = np.sort(self.ts)
        if subdivisions <= 1:
            return ts
        frac = np.arange(subdivisions) / subdivisions
        inner = (ts[:-1, None] + np.diff(ts)[:, None] * frac[None, :]).ravel()
        return np.append(inner, ts[-1])


def integrate(
    params: ProblemParams,
    a: float,
    state0: ReducedState,
    t_span: tuple[float, float],
    opts: Optional[IntegratorOptions] = None,
) -> Trajectory:
    """Integrate from state0 over t_span (t1 < t0 integrates backwards)."""
    opts = opts or IntegratorOptions()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        raise ValueError("t_span must have nonzero length")
    r_min = opts.resolved_r_min(params)
    if not state0.r > r_min:
        raise CollisionError(state0.r, r_min, t=t0)

    rhs = make_rhs(params, a, r_min)
    y0 = state0.as_array()
    solver = DOP853(
        rhs,
        t0,
        y0,
        t1,
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=np.inf if opts.max_step is None else opts.max_step,
    )

    ts = [t0]
    interpolants = []
    steps = 0
    rejected = 0
    while solver.status == "running":
        if steps >= opts.max_steps:
            logger.warning("Integrator budget of %d steps exhausted at t=%.12g", opts.max_steps, solver.t)
            raise BudgetExceeded(opts.max_steps, solver.t)
        nfev_before = solver.nfev
        message = solver.step()
        if solver.status == "failed":
            logger.warning("Integrator failed at t=%.12g: %s", solver.t, message)
            raise StiffnessSuspected(solver.t, message or "step size underflow")
        attempts = max(1, (solver.nfev - nfev_before) // _EVALS_PER_ATTEMPT)
        rejected += attempts - 1
        steps += 1
        interpolants.append(solver.dense_output())
        ts.append(solver.t)

    logger.debug(
        "Integrated a=%.12g over [%.6g, %.6g]: %d steps, %d rejected, %d evaluations",
        a, t0, t1, steps, rejected, solver.nfev,
    )
    return Trajectory(
        params,
        a,
        y0,
        OdeSolution(np.array(ts), interpolants),
        step_count=steps,
        rejected_count=rejected,
        nfev=solver.nfev,
        rhs=rhs,
    )


def locate_event(
    traj: Trajectory,
    functional: Functional,
    bracket: tuple[float, float],
    scale: float = 1.0,
) -> float:
    """Root of functional(t, state) inside bracket, by bisection on the dense output.

    Values within 1e-12*scale of zero at both ends count as no sign change.
    """
    ta, tb = float(bracket[0]), float(bracket[1])

    def g(t: float) -> float:
        return float(functional(t, traj.state(t)))

    fa, fb = g(ta), g(tb)
    noise = 1e-12 * scale
    if not fa * fb < 0 or max(abs(fa), abs(fb)) <= noise:
        raise NoSignChange((ta, tb), (fa, fb))
    width = abs(tb - ta)
    return bisect(
        g,
        min(ta, tb),
        max(ta, tb),
        xtol=max(1e-12 * width, 1e-15),
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    )


def find_crossings(
    traj: Trajectory,
    functional: Functional,
    t_start: Optional[float] = None,
    t_end: Optional[float] = None,
    direction: int = 0,
    subdivisions: int = 4,
    scale: float = 1.0,
) -> list[float]:
    """All sign changes of functional on [t_start, t_end], in increasing time.

    direction > 0 keeps upward crossings, direction < 0 downward ones.
    A zero at t_start itself is not reported.
    """
    lo = traj.t_min if t_start is None else t_start
    hi = traj.t_max if t_end is None else t_end
    grid = traj.step_grid(subdivisions)
    grid = grid[(grid > lo) & (grid < hi)]
    grid = np.concatenate(([lo], grid, [hi]))
    values = np.array([functional(t, traj.state(t)) for t in grid])

    crossings = []
    for i in range(len(grid) - 1):
        fa, fb = values[i], values[i + 1]
        if not fa * fb < 0:
            continue
        if direction > 0 and not fa < fb:
            continue
        if direction < 0 and not fa > fb:
            continue
        try:
            crossings.append(locate_event(traj, functional, (grid[i], grid[i + 1]), scale))
        except NoSignChange:
            continue
    return crossings


def first_crossing(
    traj: Trajectory,
    functional: Functional,
    t_start: Optional[float] = None,
    direction: int = 0,
    scale: float = 1.0,
) -> float:
    """First sign change after t_start; NoSignChange if there is none."""
    found = find_crossings(traj, functional, t_start=t_start, direction=direction, scale=scale)
    if not found:
        lo = traj.t_min if t_start is None else t_start
        raise NoSignChange((lo, traj.t_max), (math.nan, math.nan))
    return found[0]
