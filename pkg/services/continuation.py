"""Natural-parameter continuation in b and choreography classification."""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

import numpy as np

from .errors import HipHopError, SeedFailure, Unclassifiable
from .flow import ShootingPoint, evaluate_maps, initial_state, verify_periodicity
from .integrator import IntegratorOptions, integrate
from .model import ProblemParams
from .solver import NewtonOptions, SolutionPoint, refine_commensurate, solve_point

logger = logging.getLogger(__name__)

CLASSIFY_GRID = 256  # samples per period, a multiple of SHIFT_CANDIDATES
SHIFT_CANDIDATES = 128


@dataclass(frozen=True)
class StepOptions:
    initial_step: float = 1e-3
    grow: float = 1.5
    shrink: float = 0.5
    min_step: float = 1e-7
    max_step: float = 0.05
    max_failures: int = 12
    family_tol: float = 1e-9
    gap_tol: float = 1e-8
    both_directions: bool = False

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError("step sizes must satisfy 0 < min_step <= initial_step <= max_step")
        if not self.grow >= 1.0:
            raise ValueError(f"grow must be >= 1, got {self.grow!r}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink!r}")
        if not self.family_tol > 0 or not self.gap_tol > 0:
            raise ValueError("family_tol and gap_tol must be positive")


@dataclass(frozen=True)
class StepRecord:
    b: float
    step: float
    accepted: bool
    reason: str = ""


@dataclass
class Family:
    params: ProblemParams
    k: int
    points: list[SolutionPoint]
    step_history: list[StepRecord] = field(default_factory=list)
    mirrored: list[SolutionPoint] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def all_points(self) -> list[SolutionPoint]:
        """Mirrored (negative b) points followed by the computed ones, by increasing b."""
        return sorted(self.mirrored, key=lambda p: p.b) + list(self.points)

    @property
    def b_reached(self) -> float:
        return self.points[-1].b


@dataclass(frozen=True)
class ChoreographyClass:
    trajectory_count: int
    theta_advance: float
    match_error: float
    members: tuple[int, ...]


class _HasShootingData(Protocol):
    a: float
    b: float
    u: float
    T: float


def _accept(point: SolutionPoint, opts: StepOptions) -> tuple[bool, str]:
    if not point.converged:
        return False, "not converged"
    if point.report.residual_norm > opts.family_tol:
        return False, f"residual {point.report.residual_norm:.3e} above family tolerance"
    if point.report.state_gap > opts.gap_tol:
        return False, f"state gap {point.report.state_gap:.3e} above tolerance"
    return True, ""


def mirror_point(point: SolutionPoint) -> SolutionPoint:
    """The reflection d -> -d (z unchanged) maps the solution at b onto one at -b."""
    rdot, d, z = point.report.residual
    return replace(point, b=-point.b, report=replace(point.report, residual=(rdot, -d, z)))


def continue_family(
    params: ProblemParams,
    k: int,
    b_max: float,
    step_opts: Optional[StepOptions] = None,
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> Family:
    """Step b from 0 to b_max, re-solving (a, u, T) from the previous point.

    Stops at b_max, or when the step falls below min_step or max_failures
    consecutive steps fail; the partial family is returned in that case.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    if b_max < 0:
        raise ValueError(f"b_max must be nonnegative, got {b_max!r}")
    step_opts = step_opts or StepOptions()

    try:
        seed = solve_point(params, 0.0, k, newton_opts, integ_opts)
    except HipHopError as e:
        raise SeedFailure(k, e) from e
    family = Family(params=params, k=k, points=[seed])
    logger.info("Seed for k=%d: a=%.12g u=%.12g T=%.12g", k, seed.a, seed.u, seed.T)

    b = 0.0
    h = step_opts.initial_step
    failures = 0
    while b < b_max:
        step = min(h, step_opts.max_step, b_max - b)
        b_next = b_max if b_max - b <= step else b + step
        try:
            point = solve_point(params, b_next, k, newton_opts, integ_opts, seed=family.points[-1])
            accepted, reason = _accept(point, step_opts)
        except HipHopError as e:
            accepted, reason = False, str(e)

        family.step_history.append(StepRecord(b=b_next, step=step, accepted=accepted, reason=reason))
        if accepted:
            family.points.append(point)
            logger.info("Accepted b=%.9g (step %.3g): a=%.12g u=%.12g T=%.12g", b_next, step, point.a, point.u, point.T)
            b = b_next
            h = min(h * step_opts.grow, step_opts.max_step)
            failures = 0
            continue

        logger.info("Rejected b=%.9g (step %.3g): %s", b_next, step, reason)
        failures += 1
        h = step * step_opts.shrink
        if h < step_opts.min_step:
            family.stop_reason = f"step below {step_opts.min_step:g} at b={b:.9g} (possible fold)"
            break
        if failures >= step_opts.max_failures:
            family.stop_reason = f"{failures} consecutive failures at b={b:.9g}"
            break
    else:
        family.stop_reason = "reached b_max"

    if family.stop_reason != "reached b_max":
        logger.warning("Continuation stopped: %s", family.stop_reason)
    if step_opts.both_directions:
        family.mirrored = [mirror_point(p) for p in family.points[1:]]
    return family


def family_table(family: Family) -> list[dict[str, float]]:
    return [
        {
            "b": p.b,
            "a": p.a,
            "u": p.u,
            "T": p.T,
            "residual_norm": p.report.residual_norm,
            "state_gap": p.report.state_gap,
        }
        for p in family.all_points
    ]


def _angle_distance(x: float, y: float) -> float:
    return abs(math.remainder(x - y, 2.0 * math.pi))


def classify_choreography(
    params: ProblemParams,
    point: _HasShootingData,
    tol: float = 1e-6,
    max_periods: Optional[int] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> ChoreographyClass:
    """Count the distinct closed curves traced by the 2N primaries.

    Body j (0-based) is R^j applied to body 0, so it runs along body 0's curve
    when body 0, shifted in time by s, equals R^j of itself: r and d must match
    (d up to the sign (-1)^j) and the angle gained over the shift must equal
    j*pi/N modulo 2*pi. Shifts are s0 + 2T*n with s0 on a grid over one period
    and the angle after n periods advanced by n*theta(2T).
    """
    nb = params.bodies
    max_periods = max_periods or 4 * params.N
    period = 2.0 * point.T
    traj = integrate(params, point.a, initial_state(params, point.b, point.u), (0.0, period), integ_opts)
    delta = float(traj.y(period)[4])

    times = np.arange(CLASSIFY_GRID) * period / CLASSIFY_GRID
    samples = traj.sample(times)
    r, d, theta = samples[:, 0], samples[:, 2], samples[:, 4]
    r0 = params.r0

    circular = max(np.max(np.abs(r - r0)), np.max(np.abs(d))) / r0
    if circular <= tol:
        return ChoreographyClass(
            trajectory_count=1,
            theta_advance=delta % (2.0 * math.pi),
            match_error=float(circular),
            members=tuple(range(nb)),
        )

    stride = CLASSIFY_GRID // SHIFT_CANDIDATES
    best_match = {}
    closure_error = math.inf
    for l in range(SHIFT_CANDIDATES):
        shift = l * stride
        idx = (np.arange(CLASSIFY_GRID) + shift) % CLASSIFY_GRID
        wrapped = (np.arange(CLASSIFY_GRID) + shift) >= CLASSIFY_GRID
        r_s, d_s = r[idx], d[idx]
        theta_s = theta[idx] + np.where(wrapped, delta, 0.0)
        phase = theta_s - theta
        spread = float(np.max(phase) - np.min(phase))
        for sigma in (1.0, -1.0):
            shape = float(max(np.max(np.abs(r_s - r)), np.max(np.abs(d_s - sigma * d)))) / r0
            if shape > tol or spread > tol:
                continue
            phi = float(np.mean(phase))
            for n in range(max_periods):
                angle = phi + n * delta
                for j in range(nb):
                    if (1.0 if j % 2 == 0 else -1.0) != sigma:
                        continue
                    err = max(shape, _angle_distance(angle, j * math.pi / params.N))
                    if j == 0:
                        if l == 0 and n == 0:
                            continue
                        closure_error = min(closure_error, err)
                    if err <= tol and err < best_match.get(j, math.inf):
                        best_match[j] = err

    if 0 not in best_match:
        raise Unclassifiable(closure_error, tol)

    members = sorted(best_match)
    g = nb
    for j in members:
        g = math.gcd(g, j)
    count = g
    match_error = float(max(best_match.values()))
    logger.info(
        "Choreography: %d trajectories for %d primaries (theta advance %.12g, match error %.3e)",
        count, nb, delta, match_error,
    )
    return ChoreographyClass(
        trajectory_count=count,
        theta_advance=delta % (2.0 * math.pi),
        match_error=match_error,
        members=tuple(range(0, nb, g)),
    )


def commensurate_advance(delta: float, max_periods: int) -> tuple[int, int]:
    """(p, q) with 1 <= q <= max_periods minimising |q*delta - 2*pi*p|.

    The smallest q wins ties. After q periods body 0 is back where it started
    when theta(2T) = 2*pi*p/q.
    """
    if max_periods < 1:
        raise ValueError(f"max_periods must be >= 1, got {max_periods!r}")
    best = (math.inf, 0, 1)
    for q in range(1, max_periods + 1):
        p = round(q * delta / (2.0 * math.pi))
        err = abs(q * delta - 2.0 * math.pi * p)
        if err < best[0]:
            best = (err, p, q)
    return best[1], best[2]


def refine_choreography(
    params: ProblemParams,
    point: _HasShootingData,
    k: int = 1,
    max_periods: Optional[int] = None,
    newton_opts: Optional[NewtonOptions] = None,
    integ_opts: Optional[IntegratorOptions] = None,
) -> SolutionPoint:
    """Move a solution onto the nearby member whose orbit closes exactly.

    A family point is only commensurate to the accuracy it was given with;
    this fixes theta(2T) to the closest 2*pi*p/q (q < max_periods, the range
    `classify_choreography` searches) and re-solves with b free.
    """
    newton_opts = newton_opts or NewtonOptions()
    max_periods = max_periods or 4 * params.N
    shooting = ShootingPoint(a=point.a, b=point.b, u=point.u, T=point.T)
    delta = 2.0 * evaluate_maps(params, shooting, integ_opts).theta
    p, q = commensurate_advance(delta, max_periods - 1)
    target = 2.0 * math.pi * p / q
    logger.info("Theta advance %.12g refined towards 2*pi*%d/%d (offset %.3e)", delta, p, q, delta - target)

    a, b, u, T, iterations = refine_commensurate(
        params, (point.a, point.b, point.u, point.T), 0.5 * target, newton_opts, integ_opts,
    )
    report = verify_periodicity(params, ShootingPoint(a=a, b=b, u=u, T=T), integ_opts)
    return SolutionPoint(
        a=a, b=b, u=u, T=T, k=k,
        report=report,
        converged=report.residual_norm <= 10.0 * newton_opts.tol_residual,
        iterations=iterations,
    )
