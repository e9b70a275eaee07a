import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from services.errors import NoSignChange, OutOfRegime
from services.flow import initial_state
from services.integrator import first_crossing, integrate
from services.model import ProblemParams
from services.period import (
    energy_constant,
    invert_period,
    period_curve,
    period_sample,
    period_T,
    turning_point,
)


def test_turning_point_closed_form(params):
    assert energy_constant(params, 1.0) == pytest.approx(-5.0)
    t1 = turning_point(params, 1.0)
    assert t1 == pytest.approx(math.sqrt(1.76), rel=1e-14)
    assert 12.0 / math.sqrt(t1 ** 2 + 4.0) == pytest.approx(5.0, rel=1e-14)


def test_turning_point_blows_up_near_u_max(params):
    u_max = params.constants.u_max
    near = turning_point(params, u_max * (1 - 1e-6))
    nearer = turning_point(params, u_max * (1 - 1e-7))
    assert near > 1e3
    assert nearer > near


@pytest.mark.parametrize("u", [0.0, -0.0])
def test_zero_velocity_is_out_of_regime(params, u):
    with pytest.raises(OutOfRegime):
        turning_point(params, u)


def test_escape_velocity_is_out_of_regime(params):
    with pytest.raises(OutOfRegime):
        period_T(params, params.constants.u_max)


def test_small_amplitude_limit(params):
    assert period_T(params, 1e-4) == pytest.approx(params.constants.t2_star, abs=1e-4)


def test_small_amplitude_error_shrinks(params):
    t2 = params.constants.t2_star
    errors = [abs(period_T(params, u) - t2) for u in (1e-2, 1e-3, 1e-4)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] <= 1e-6


def test_divergence_near_escape(params):
    u_max = params.constants.u_max
    t_999 = period_T(params, 0.999 * u_max)
    assert t_999 > 10 * params.constants.t2_star
    assert period_T(params, 0.9999 * u_max) > t_999


@given(u=st.floats(min_value=0.01, max_value=2.4))
@settings(max_examples=25, deadline=None)
def test_period_even_in_u(u):
    p = ProblemParams(N=3)
    assert period_T(p, -u) == period_T(p, u)


def test_curve_is_sorted_and_increasing(params):
    rows = period_curve(params, [2.0, 0.5, 1.5, 1.0, 0.99 * params.constants.u_max])
    assert [row.u for row in rows] == [0.5, 1.0, 1.5, 2.0, 0.99 * params.constants.u_max]
    periods = [row.T for row in rows]
    assert all(x < y for x, y in zip(periods, periods[1:]))


def test_curve_marks_out_of_regime_rows(params):
    u_max = params.constants.u_max
    rows = period_curve(params, [1.0, u_max + 0.1])
    assert rows[0].T == pytest.approx(period_T(params, 1.0))
    assert isinstance(rows[1], OutOfRegime)


def test_empty_curve(params):
    assert period_curve(params, []) == []


def test_period_sample_fields(params):
    s = period_sample(params, 1.0)
    assert (s.u, s.c) == (1.0, pytest.approx(-5.0))
    assert s.t1 == pytest.approx(math.sqrt(1.76))
    assert s.T == period_T(params, 1.0)


def test_invert_period_round_trip(params):
    T = period_T(params, 1.0)
    assert invert_period(params, T) == pytest.approx(1.0, abs=1e-8)


def test_invert_period_below_limit(params):
    with pytest.raises(NoSignChange):
        invert_period(params, 0.5 * params.constants.t2_star)


def _ode_half_period(params, u):
    a = params.constants.a_star
    horizon = 1.5 * period_T(params, u)
    traj = integrate(params, a, initial_state(params, 0.0, u), (0.0, horizon))
    return first_crossing(traj, lambda t, s: s.z, t_start=0.0, direction=-1)


def test_quadrature_matches_ode(params):
    assert period_T(params, 1.5) == pytest.approx(_ode_half_period(params, 1.5), rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("u", np.linspace(0.2, 2.2, 10))
def test_quadrature_matches_ode_across_regime(params, u):
    assert period_T(params, u) == pytest.approx(_ode_half_period(params, u), rel=1e-8)
