"""Half-period T(u) of the massless body when the primaries stay on their circle.

With r = r0 and d = 0 the axial motion has the first integral
z'^2 = 4mN / sqrt(z^2 + r0^2) + c, c = u^2 - 4mN/r0, and turns around at
z = +-t1 with sqrt(t1^2 + r0^2) = 4mN/|c|.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import NoSignChange, OutOfRegime
from .model import ProblemParams

logger = logging.getLogger(__name__)

GAUSS_NODES = 16
MAX_PANELS = 4096
QUADRATURE_RTOL = 1e-11
# Below this turning point (relative to r0) the small-amplitude limit is returned.
SMALL_AMPLITUDE = 1e-8


@dataclass(frozen=True)
class PeriodSample:
    u: float
    c: float
    t1: float
    T: float


@lru_cache(maxsize=None)
def _gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(n)
    return nodes, weights


def _check_regime(params: ProblemParams, u: float) -> None:
    u_max = params.constants.u_max
    if not 0 < abs(u) < u_max:
        raise OutOfRegime(u, u_max)


def energy_constant(params: ProblemParams, u: float) -> float:
    return u * u - 4.0 * params.m * params.N / params.r0


def turning_point(params: ProblemParams, u: float) -> float:
    """t1 = sqrt(16 m^2 N^2 / c^2 - r0^2), evaluated without cancellation.

    16 m^2 N^2 / c^2 - r0^2 = (S1 - r0)(S1 + r0) with S1 = 4mN/|c| and
    S1 - r0 = r0 u^2 / |c|.
    """
    _check_regime(params, u)
    c = abs(energy_constant(params, u))
    s1 = 4.0 * params.m * params.N / c
    return abs(u) * math.sqrt(params.r0 * (s1 + params.r0) / c)


def _half_integrand(params: ProblemParams, t1: float, s1: float, phi: np.ndarray) -> np.ndarray:
    # dz / sqrt(f(z) + c) after z = t1 sin(phi); the endpoint singularities cancel exactly.
    sz = np.sqrt((t1 * np.sin(phi)) ** 2 + params.r0 ** 2)
    return np.sqrt(sz * s1 * (s1 + sz) / (4.0 * params.m * params.N))


def _composite_gauss(fn, lo: float, hi: float, panels: int) -> float:
    nodes, weights = _gauss_rule(GAUSS_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    return float(np.sum(np.repeat(half, GAUSS_NODES) * np.tile(weights, panels) * fn(x)))


def period_T(params: ProblemParams, u: float) -> float:
    """T(u): time from z = -t1 to z = t1; z(t) has period 2T(u)."""
    t1 = turning_point(params, u)
    if t1 < SMALL_AMPLITUDE * params.r0:
        return params.constants.t2_star
    s1 = 4.0 * params.m * params.N / abs(energy_constant(params, u))

    def fn(phi):
        return _half_integrand(params, t1, s1, phi)

    # The integrand is even in phi; integrate [0, pi/2] and double.
    panels = 1
    previous = _composite_gauss(fn, 0.0, 0.5 * math.pi, panels)
    while panels < MAX_PANELS:
        panels *= 2
        current = _composite_gauss(fn, 0.0, 0.5 * math.pi, panels)
        if abs(current - previous) <= QUADRATURE_RTOL * abs(current):
            return 2.0 * current
        previous = current
    logger.warning("Period quadrature at u=%.12g stopped at %d panels", u, panels)
    return 2.0 * previous


def period_sample(params: ProblemParams, u: float) -> PeriodSample:
    return PeriodSample(
        u=u,
        c=energy_constant(params, u),
        t1=turning_point(params, u),
        T=period_T(params, u),
    )


def period_curve(
    params: ProblemParams,
    u_grid: Sequence[float],
) -> list[Union[PeriodSample, OutOfRegime]]:
    """Samples sorted by u; an out-of-regime u yields its OutOfRegime error in place."""
    rows: list[Union[PeriodSample, OutOfRegime]] = []
    for u in sorted(float(v) for v in u_grid):
        try:
            rows.append(period_sample(params, u))
        except OutOfRegime as e:
            logger.info("Period curve: %s", e)
            rows.append(e)
    return rows


def invert_period(
    params: ProblemParams,
    T_target: float,
    bracket: Optional[tuple[float, float]] = None,
    scan_points: int = 64,
) -> float:
    """Smallest u > 0 in bracket with T(u) = T_target.

    The bracket is scanned for the first sign change of T(u) - T_target and
    refined with brentq; monotonicity of T is not assumed.
    """
    u_max = params.constants.u_max
    lo, hi = bracket if bracket is not None else (1e-3 * u_max, 0.9999 * u_max)
    grid = np.linspace(lo, hi, scan_points)
    values = [period_T(params, u) - T_target for u in grid]
    for i in range(scan_points - 1):
        if values[i] == 0.0:
            return float(grid[i])
        if values[i] * values[i + 1] < 0:
            return float(brentq(
                lambda u: period_T(params, u) - T_target,
                grid[i], grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps,
            ))
    raise NoSignChange((lo, hi), (values[0], values[-1]))
