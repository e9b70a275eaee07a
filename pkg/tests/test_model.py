import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from services.errors import CollisionError
from services.integrator import integrate
from services.model import (
    ProblemParams,
    ReducedState,
    accelerations,
    body_positions,
    embed_bodies,
    force_f,
    force_g,
    force_h,
    reduced_energy,
    reduced_potential,
    rotation_matrix,
    smallest_multiple,
    sum_constants,
)

radii = st.floats(min_value=0.3, max_value=5.0)
offsets = st.floats(min_value=-3.0, max_value=3.0)
heights = st.floats(min_value=-4.0, max_value=4.0)


def longdouble_sums(N):
    k = np.arange(1, 2 * N, dtype=np.longdouble)
    s = np.sin(k * np.longdouble(np.pi) / (2 * N))
    odd = (np.arange(1, 2 * N) % 2 == 1)
    alpha = np.sum(np.longdouble(4) / s[odd] ** 3) / 16
    gamma = np.sum(np.longdouble(1) / s) / 4
    return float(alpha), float(gamma)


def test_sum_constants_n1():
    assert sum_constants(1) == pytest.approx((0.25, 0.25), rel=1e-15)


def test_sum_constants_n3():
    alpha, gamma = sum_constants(3)
    assert alpha == pytest.approx(4.25, rel=1e-14)
    assert gamma == pytest.approx((5 + 4 / math.sqrt(3)) / 4, rel=1e-12)


@pytest.mark.parametrize("N", range(1, 13))
def test_sum_constants_match_extended_precision(N):
    alpha, gamma = sum_constants(N)
    ref_alpha, ref_gamma = longdouble_sums(N)
    assert alpha == pytest.approx(ref_alpha, rel=1e-13)
    assert gamma == pytest.approx(ref_gamma, rel=1e-13)


@pytest.mark.parametrize("N", [0, -1, 2.5, True])
def test_sum_constants_rejects_bad_n(N):
    with pytest.raises(ValueError):
        sum_constants(N)


def test_derived_constants_n3(params):
    c = params.constants
    assert c.alpha_n == pytest.approx(4.25)
    assert c.a_star == pytest.approx(1.911727, abs=1e-6)
    assert c.t1_star == pytest.approx(math.pi * math.sqrt(8 / 4.25), rel=1e-14)
    assert c.t1_star == pytest.approx(4.3102296, abs=1e-6)
    assert c.t2_star == pytest.approx(3.627599, abs=1e-6)
    assert c.u_max == pytest.approx(math.sqrt(6), rel=1e-15)
    assert smallest_multiple(c) == 1


@pytest.mark.parametrize("N, m, r0", [(3, 1.0, 2.0), (1, 1.0, 1.0), (7, 0.3, 5.5), (12, 2.0, 0.4)])
def test_a_star_squared_is_exact(N, m, r0):
    p = ProblemParams(N=N, m=m, r0=r0)
    target = p.m * p.constants.gamma_n * p.r0
    assert abs(p.constants.a_star ** 2 - target) <= 4 * np.spacing(target)


def test_derived_constants_n1():
    c = ProblemParams(N=1, m=1.0, r0=1.0).constants
    assert c.a_star == pytest.approx(0.5)
    assert c.t1_star == pytest.approx(2 * math.pi)
    assert c.t2_star == pytest.approx(math.pi * math.sqrt(0.5))


def test_smallest_multiple_is_minimal(params):
    c = params.constants
    k = smallest_multiple(c)
    assert c.t2_star < k * c.t1_star
    assert not c.t2_star < (k - 1) * c.t1_star


@pytest.mark.parametrize("kwargs", [{"N": 0}, {"N": 3, "m": 0.0}, {"N": 3, "r0": -1.0}])
def test_problem_params_validation(kwargs):
    with pytest.raises(ValueError):
        ProblemParams(**kwargs)


def test_reduced_state_rejects_nonpositive_radius():
    with pytest.raises(CollisionError):
        ReducedState(r=0.0)


def test_equilibrium_is_balanced(params):
    a = params.constants.a_star
    f, g, h = accelerations(params, a, ReducedState(r=params.r0))
    assert abs(f) <= 1e-14
    assert g == 0.0
    assert h == 0.0


def test_accelerations_collision_floor(params):
    with pytest.raises(CollisionError):
        accelerations(params, 1.0, ReducedState(r=1e-9))


@given(r=radii, d=offsets)
def test_f_even_in_d(r, d):
    p = ProblemParams(N=3)
    assert force_f(p, 1.3, r, d) == pytest.approx(force_f(p, 1.3, r, -d), rel=1e-13, abs=1e-15)


@given(r=radii, d=offsets)
def test_g_odd_in_d(r, d):
    p = ProblemParams(N=3)
    assert force_g(p, r, -d) == pytest.approx(-force_g(p, r, d), rel=1e-13, abs=1e-15)


@given(r=radii, d=offsets, z=heights)
def test_h_parities(r, d, z):
    p = ProblemParams(N=3)
    h = force_h(p, r, d, z)
    # Even in d, odd in z, hence odd under (d, z) -> (-d, -z).
    assert force_h(p, r, -d, z) == pytest.approx(h, rel=1e-13, abs=1e-15)
    assert force_h(p, r, d, -z) == pytest.approx(-h, rel=1e-13, abs=1e-15)
    assert force_h(p, r, -d, -z) == pytest.approx(-h, rel=1e-13, abs=1e-15)


@given(N=st.integers(min_value=1, max_value=6), r=radii, d=st.floats(min_value=-2.0, max_value=2.0))
@settings(max_examples=50)
def test_forces_are_potential_gradients(N, r, d):
    p = ProblemParams(N=N)
    a = 0.9
    eps = 1e-6
    dU_dr = (reduced_potential(p, r + eps, d) - reduced_potential(p, r - eps, d)) / (2 * eps)
    dU_dd = (reduced_potential(p, r, d + eps) - reduced_potential(p, r, d - eps)) / (2 * eps)
    scale = 1.0 + abs(force_f(p, a, r, d) - a * a / r ** 3)
    assert force_f(p, a, r, d) - a * a / r ** 3 == pytest.approx(-dU_dr, abs=1e-6 * scale)
    assert force_g(p, r, d) == pytest.approx(-dU_dd, abs=1e-6 * (1.0 + abs(force_g(p, r, d))))


def test_reduced_energy_at_equilibrium(params):
    a = params.constants.a_star
    expected = a * a / (2 * params.r0 ** 2) + reduced_potential(params, params.r0, 0.0)
    assert reduced_energy(params, a, ReducedState(r=params.r0)) == pytest.approx(expected, rel=1e-15)


def test_rotation_matrix_order():
    for N in (1, 2, 3, 5):
        R = rotation_matrix(N)
        assert np.allclose(np.linalg.matrix_power(R, 2 * N), np.eye(3), atol=1e-12)
        if N > 1:
            assert not np.allclose(np.linalg.matrix_power(R, N), np.eye(3), atol=1e-6)


@given(N=st.integers(min_value=1, max_value=8), r=radii, theta=st.floats(-6.3, 6.3), d=offsets)
@settings(max_examples=60)
def test_embed_bodies_properties(N, r, theta, d):
    p = ProblemParams(N=N)
    pos = embed_bodies(p, r, theta, d)
    assert pos.shape == (2 * N, 3)
    assert np.allclose(np.hypot(pos[:, 0], pos[:, 1]), r, rtol=1e-12)
    assert np.allclose(np.sum(pos, axis=0), 0.0, atol=1e-10 * (1 + r + abs(d)))
    assert np.allclose(pos[0::2, 2], d) and np.allclose(pos[1::2, 2], -d)
    R = rotation_matrix(N)
    assert np.allclose(pos[1:], pos[:-1] @ R.T, atol=1e-12 * (1 + r + abs(d)))


def test_embed_bodies_rejects_nonpositive_radius(params):
    with pytest.raises(ValueError):
        embed_bodies(params, 0.0, 0.0, 0.0)


def test_body_positions_equilibrium(params):
    a = params.constants.a_star
    traj = integrate(params, a, ReducedState(r=params.r0), (0.0, 1.0))
    pos = body_positions(params, traj, [0.0, 0.5, 1.0])
    assert pos.shape == (3, 2 * params.N + 1, 3)
    assert np.allclose(pos[:, 0, :], 0.0)
    assert np.allclose(np.linalg.norm(pos[:, 1:, :2], axis=2), params.r0, atol=1e-10)
