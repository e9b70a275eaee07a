"""Physical model of the restricted hip-hop (2N+1)-body problem.

The 2N equal-mass primaries sit on the vertices of a regular antiprism whose
first vertex is at (r cos(theta), r sin(theta), d); the massless body moves on
the symmetry axis at (0, 0, z).
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import CollisionError

if TYPE_CHECKING:
    from .integrator import Trajectory

# Default collision floor, relative to r0.
R_MIN_FACTOR = 1e-8


@dataclass(frozen=True)
class _SumKernel:
    sin2_all: np.ndarray   # sin^2(k pi / 2N), k = 1 .. 2N-1
    odd_all: np.ndarray    # ((-1)^k - 1)^2, i.e. 4 for odd k and 0 for even k
    sin2_odd: np.ndarray   # sin^2(k pi / 2N) for odd k only


@dataclass(frozen=True)
class DerivedConstants:
    alpha_n: float
    gamma_n: float
    a_star: float
    t1_star: float
    t2_star: float
    u_max: float


@dataclass(frozen=True)
class ProblemParams:
    N: int
    m: float = 1.0
    r0: float = 2.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m!r}")
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def bodies(self) -> int:
        return 2 * self.N

    @property
    def default_r_min(self) -> float:
        return R_MIN_FACTOR * self.r0

    @cached_property
    def constants(self) -> DerivedConstants:
        return derived_constants(self)

    @cached_property
    def kernel(self) -> _SumKernel:
        k = np.arange(1, 2 * self.N)
        s = np.sin(k * np.pi / (2 * self.N))
        odd = (k % 2 == 1)
        return _SumKernel(
            sin2_all=s * s,
            odd_all=np.where(odd, 4.0, 0.0),
            sin2_odd=(s * s)[odd],
        )


@dataclass(frozen=True)
class ReducedState:
    r: float
    rdot: float = 0.0
    d: float = 0.0
    ddot: float = 0.0
    theta: float = 0.0
    z: float = 0.0
    zdot: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise CollisionError(self.r, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.r, self.rdot, self.d, self.ddot, self.theta, self.z, self.zdot],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y: Sequence[float]) -> "ReducedState":
        return cls(*(float(v) for v in y[:7]))


def sum_constants(N: int) -> tuple[float, float]:
    """Return (alpha_N, gamma_N).

    alpha_N = 1/16 * sum ((-1)^k - 1)^2 / sin^3(k pi/2N) and
    gamma_N = 1/4 * sum 1 / sin(k pi/2N), k = 1 .. 2N-1. Even k contribute
    nothing to alpha_N and are skipped.
    """
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    k = np.arange(1, 2 * N)
    s = np.sin(k * np.pi / (2 * N))
    alpha = math.fsum(4.0 / s[k % 2 == 1] ** 3) / 16.0
    gamma = math.fsum(1.0 / s) / 4.0
    return alpha, gamma


def derived_constants(params: ProblemParams) -> DerivedConstants:
    alpha, gamma = sum_constants(params.N)
    m, r0, N = params.m, params.r0, params.N
    return DerivedConstants(
        alpha_n=alpha,
        gamma_n=gamma,
        a_star=math.sqrt(m * gamma * r0),
        t1_star=math.pi * math.sqrt(r0 ** 3 / (m * alpha)),
        t2_star=math.pi * math.sqrt(r0 ** 3 / (2 * m * N)),
        u_max=math.sqrt(4 * m * N / r0),
    )


def smallest_multiple(constants: DerivedConstants) -> int:
    """First positive integer k with t2_star < k * t1_star."""
    return int(math.floor(constants.t2_star / constants.t1_star)) + 1


def _check_radius(r: float, r_min: Optional[float], params: ProblemParams) -> None:
    floor = params.default_r_min if r_min is None else r_min
    if not r > floor:
        raise CollisionError(r, floor)


def force_f(params: ProblemParams, a: float, r: float, d: float) -> float:
    kern = params.kernel
    denom = (4.0 * r * r * kern.sin2_all + kern.odd_all * d * d) ** 1.5
    return a * a / r ** 3 - 2.0 * r * params.m * float(np.sum(kern.sin2_all / denom))


def force_g(params: ProblemParams, r: float, d: float) -> float:
    kern = params.kernel
    denom = (4.0 * r * r * kern.sin2_odd + 4.0 * d * d) ** 1.5
    return -0.5 * params.m * d * float(np.sum(4.0 / denom))


def force_h(params: ProblemParams, r: float, d: float, z: float) -> float:
    lo = z - d
    hi = z + d
    r2 = r * r
    return -params.m * params.N * (lo / (lo * lo + r2) ** 1.5 + hi / (hi * hi + r2) ** 1.5)


def accelerations(
    params: ProblemParams,
    a: float,
    state: ReducedState,
    r_min: Optional[float] = None,
) -> tuple[float, float, float]:
    """Return (r'', d'', z'') = (f(r, d), g(r, d), h(r, d, z))."""
    _check_radius(state.r, r_min, params)
    return (
        force_f(params, a, state.r, state.d),
        force_g(params, state.r, state.d),
        force_h(params, state.r, state.d, state.z),
    )


def reduced_potential(params: ProblemParams, r: float, d: float) -> float:
    """U(r, d) with -grad U = (f - a^2/r^3, g)."""
    kern = params.kernel
    terms = (4.0 * r * r * kern.sin2_all + kern.odd_all * d * d) ** -0.5
    return -0.5 * params.m * float(np.sum(terms))


def reduced_energy(
    params: ProblemParams,
    a: float,
    state: ReducedState,
    r_min: Optional[float] = None,
) -> float:
    """Energy of the (r, d) subsystem; conserved along exact solutions."""
    _check_radius(state.r, r_min, params)
    kinetic = 0.5 * (state.rdot ** 2 + state.ddot ** 2)
    centrifugal = a * a / (2.0 * state.r ** 2)
    return kinetic + centrifugal + reduced_potential(params, state.r, state.d)


def rotation_matrix(N: int) -> np.ndarray:
    """Rotation by pi/N about the z-axis composed with z -> -z."""
    c, s = math.cos(math.pi / N), math.sin(math.pi / N)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, -1.0]])


def embed_bodies(params: ProblemParams, r: float, theta: float, d: float) -> np.ndarray:
    """Positions of the 2N primaries, shape (2N, 3).

    Body j is R^(j-1) applied to (r cos theta, r sin theta, d); the z
    coordinates alternate d, -d, d, ...
    """
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    j = np.arange(2 * params.N)
    angles = theta + j * math.pi / params.N
    out = np.empty((2 * params.N, 3))
    out[:, 0] = r * np.cos(angles)
    out[:, 1] = r * np.sin(angles)
    out[:, 2] = np.where(j % 2 == 0, d, -d)
    return out


def body_positions(
    params: ProblemParams,
    traj: "Trajectory",
    times: Sequence[float],
) -> np.ndarray:
    """Positions of all 2N+1 bodies, shape (len(times), 2N+1, 3).

    Index 0 along the second axis is the massless body on the axis; 1 .. 2N
    are the primaries in embed_bodies order.
    """
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, 2 * params.N + 1, 3))
    for i, t in enumerate(times):
        y = traj.y(t)
        out[i, 0, 2] = y[5]
        out[i, 1:, :] = embed_bodies(params, y[0], y[4], y[2])
    return out
