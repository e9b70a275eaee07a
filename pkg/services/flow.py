"""Shooting maps R, D, Theta, Z and periodicity verification.

All maps start from r = r0, r' = 0, d = 0, d' = b, theta = 0, z = 0, z' = u.
If r'(T) = d(T) = z(T) = 0, the reversibility of the system makes r even and
d, z odd about t = 0 and t = T, hence 2T-periodic.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .integrator import IntegratorOptions, Trajectory, integrate
from .model import ProblemParams, ReducedState, reduced_energy

logger = logging.getLogger(__name__)

# Number of s values in [0, T] used for the symmetry defect.
SYMMETRY_GRID = 65

# State components compared by the periodicity gap (theta excluded).
_PERIODIC_COMPONENTS = [0, 1, 2, 3, 5, 6]


@dataclass(frozen=True)
class ShootingPoint:
    a: float
    b: float
    u: float
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")


@dataclass(frozen=True)
class PeriodicityReport:
    residual: tuple[float, float, float]
    residual_norm: float
    state_gap: float
    theta_advance: float
    symmetry_defect: float
    energy_drift: float


class MapValues(NamedTuple):
    rdot: float
    d: float
    z: float
    theta: float
    trajectory: Trajectory


def initial_state(params: ProblemParams, b: float, u: float) -> ReducedState:
    return ReducedState(r=params.r0, rdot=0.0, d=0.0, ddot=b, theta=0.0, z=0.0, zdot=u)


def evaluate_maps(
    params: ProblemParams,
    point: ShootingPoint,
    opts: Optional[IntegratorOptions] = None,
) -> MapValues:
    traj = integrate(params, point.a, initial_state(params, point.b, point.u), (0.0, point.T), opts)
    y = traj.y(point.T)
    return MapValues(rdot=float(y[1]), d=float(y[2]), z=float(y[5]), theta=float(y[4]), trajectory=traj)


def residual3(
    params: ProblemParams,
    point: ShootingPoint,
    opts: Optional[IntegratorOptions] = None,
) -> np.ndarray:
    values = evaluate_maps(params, point, opts)
    return np.array([values.rdot, values.d, values.z])


def residual2_primaries(
    params: ProblemParams,
    a: float,
    b: float,
    T: float,
    opts: Optional[IntegratorOptions] = None,
) -> np.ndarray:
    """(R'(a, b, T), D(a, b, T)); the massless body is left at rest on the axis."""
    values = evaluate_maps(params, ShootingPoint(a=a, b=b, u=0.0, T=T), opts)
    return np.array([values.rdot, values.d])


def _energy_drift(params: ProblemParams, traj: Trajectory, times: np.ndarray) -> float:
    energies = np.array([reduced_energy(params, traj.a, traj.state(t)) for t in times])
    e0 = energies[0]
    scale = max(abs(e0), np.finfo(float).tiny)
    return float(np.max(np.abs(energies - e0)) / scale)


def verify_periodicity(
    params: ProblemParams,
    point: ShootingPoint,
    opts: Optional[IntegratorOptions] = None,
    grid: int = SYMMETRY_GRID,
) -> PeriodicityReport:
    """Integrate over [0, 2T] and measure how far the point is from periodic.

    No thresholds are applied; callers decide what passes.
    """
    T = point.T
    traj = integrate(params, point.a, initial_state(params, point.b, point.u), (0.0, 2.0 * T), opts)
    y_T = traj.y(T)
    residual = (float(y_T[1]), float(y_T[2]), float(y_T[5]))

    y_0 = traj.y(0.0)
    y_2T = traj.y(2.0 * T)
    state_gap = float(np.max(np.abs(y_2T[_PERIODIC_COMPONENTS] - y_0[_PERIODIC_COMPONENTS])))

    s = np.linspace(0.0, T, grid)
    after = traj.sample(T + s)
    before = traj.sample(T - s)
    symmetry_defect = float(max(
        np.max(np.abs(after[:, 0] - before[:, 0])),
        np.max(np.abs(after[:, 2] + before[:, 2])),
        np.max(np.abs(after[:, 5] + before[:, 5])),
    ))

    report = PeriodicityReport(
        residual=residual,
        residual_norm=float(np.max(np.abs(residual))),
        state_gap=state_gap,
        theta_advance=float(y_2T[4]),
        symmetry_defect=symmetry_defect,
        energy_drift=_energy_drift(params, traj, np.linspace(0.0, 2.0 * T, 2 * grid - 1)),
    )
    logger.debug(
        "Verified (a=%.9g, b=%.9g, u=%.9g, T=%.9g): residual %.3e, gap %.3e, symmetry %.3e",
        point.a, point.b, point.u, point.T,
        report.residual_norm, report.state_gap, report.symmetry_defect,
    )
    return report


def time_reversal_defect(
    params: ProblemParams,
    a: float,
    b: float,
    u: float,
    t: float,
    opts: Optional[IntegratorOptions] = None,
    grid: int = SYMMETRY_GRID,
) -> float:
    """Largest deviation from R(s)=R(-s), D(s)=-D(-s), Z(s)=-Z(-s) on [0, t]."""
    state0 = initial_state(params, b, u)
    forward = integrate(params, a, state0, (0.0, t), opts)
    backward = integrate(params, a, state0, (0.0, -t), opts)
    s = np.linspace(0.0, t, grid)
    plus = forward.sample(s)
    minus = backward.sample(-s)
    return float(max(
        np.max(np.abs(plus[:, 0] - minus[:, 0])),
        np.max(np.abs(plus[:, 2] + minus[:, 2])),
        np.max(np.abs(plus[:, 5] + minus[:, 5])),
    ))
