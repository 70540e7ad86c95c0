import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonholomech.se2 import (
    BodyVelocity,
    FirstHarmonicFit,
    GroupElementSE2,
    IntegrationError,
    Trajectory,
    fit_first_harmonic,
    left_lift,
    reconstruct,
    rk4_step,
    se2_exp,
    wrap_angle,
)

angles = st.floats(-20, 20, allow_nan=False)
coords = st.floats(-10, 10, allow_nan=False)


def test_left_lift_identity_and_quarter_turn():
    assert np.array_equal(left_lift(GroupElementSE2()), np.eye(3))
    q = left_lift(GroupElementSE2(theta=math.pi / 2))
    assert np.allclose(q, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


@given(angles, angles)
def test_left_lift_composes_rotations(a, b):
    prod = left_lift(a) @ left_lift(b)
    assert np.allclose(prod[:2, :2], left_lift(a + b)[:2, :2], atol=1e-12)


@given(angles)
def test_left_lift_is_proper_rigid(a):
    L = left_lift(a)
    assert np.allclose(L[:2, :2] @ L[:2, :2].T, np.eye(2), atol=1e-14)
    assert np.array_equal(L[2], [0.0, 0.0, 1.0])
    assert abs(np.linalg.det(L) - 1.0) < 1e-14


@given(angles)
def test_normalize_range(a):
    w = GroupElementSE2(0, 0, a).normalize().theta
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)


def test_wrap_angle_boundary():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


@given(coords, coords, angles, coords, coords, angles)
def test_group_inverse_and_associativity(x, y, t, u, v, s):
    g, h = GroupElementSE2(x, y, t), GroupElementSE2(u, v, s)
    assert (g @ g.inverse()).normalize().distance(GroupElementSE2()) < 1e-9
    k = GroupElementSE2(0.3, -0.4, 0.5)
    assert ((g @ h) @ k).distance(g @ (h @ k)) < 1e-9


def test_body_velocity_rejects_non_finite():
    with pytest.raises(ValueError):
        BodyVelocity(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        BodyVelocity(0, float("inf"), 0)


def test_reconstruct_zero_velocity_is_constant():
    g0 = GroupElementSE2(1.0, -2.0, 0.3)
    tr = reconstruct(g0, lambda t: BodyVelocity(), dt=0.01, t_final=1.0)
    assert np.array_equal(tr.states, np.tile(g0.as_array(), (len(tr), 1)))


def test_reconstruct_pure_rotation():
    tr = reconstruct(GroupElementSE2(), lambda t: (0.0, 0.0, 2.0), dt=1e-3, t_final=1.0)
    assert np.allclose(tr.column("theta"), 2.0 * tr.times, atol=1e-12)
    assert np.abs(tr.states[:, :2]).max() < 1e-15


def test_reconstruct_unit_circle_closes():
    # 2*pi is not a whole number of 1e-3 steps; use the nearest step that lands on it
    dt = 2 * math.pi / 6283
    tr = reconstruct(GroupElementSE2(), lambda t: (1.0, 0.0, 1.0), dt=dt, t_final=2 * math.pi)
    end = tr.states[-1]
    assert tr.times[-1] == pytest.approx(2 * math.pi, abs=1e-12)
    assert math.hypot(end[0], end[1]) < 1e-6
    assert abs(end[2] - 2 * math.pi) < 1e-12
    assert tr.states[0].tolist() == [0.0, 0.0, 0.0]


def test_reconstruct_circle_at_nominal_step_tracks_exponential():
    tr = reconstruct(GroupElementSE2(), lambda t: (1.0, 0.0, 1.0), dt=1e-3, t_final=2 * math.pi)
    exact = se2_exp((1.0, 0.0, 1.0), tr.times[-1]).as_array()
    assert np.abs(tr.states[-1] - exact).max() < 1e-10


def _circle_error(dt):
    T = 2.0
    tr = reconstruct(GroupElementSE2(), lambda t: (1.0, 0.2, 1.0), dt=dt, t_final=T)
    g = se2_exp((1.0, 0.2, 1.0), T)
    return np.abs(tr.states[-1] - g.as_array()).max()


def test_rk4_fourth_order_convergence():
    ratio = _circle_error(0.1) / _circle_error(0.05)
    assert 13 < ratio < 19


def test_reconstruct_non_finite_aborts_with_time():
    with pytest.raises(IntegrationError) as info:
        reconstruct(GroupElementSE2(), lambda t: (float("nan") if t > 0.5 else 0.0, 0, 0), dt=0.1, t_final=1.0)
    assert 0.5 <= info.value.time <= 0.7


def test_rk4_step_basic():
    y = np.array([1.0, 2.0])
    assert np.array_equal(rk4_step(lambda t, s: np.zeros(2), y, 0.0, 0.1), y)
    e = rk4_step(lambda t, s: s, np.array([1.0]), 0.0, 0.1)[0]
    assert abs(e - math.exp(0.1)) < 1e-6 and abs(e - math.exp(0.1)) > 0


def test_fit_exact_harmonic():
    w = 1.7
    t = np.arange(0, 4 * 2 * math.pi / w, 1e-3)
    fit = fit_first_harmonic(t, 2 * np.cos(w * t - 0.3) + 0.5, w)
    assert fit.Theta == pytest.approx(2, abs=1e-12)
    assert fit.psi == pytest.approx(0.3, abs=1e-12)
    assert fit.C == pytest.approx(0.5, abs=1e-12)
    assert fit.omega == w


def test_fit_constant_reports_zero_phase():
    t = np.arange(0, 10, 0.01)
    fit = fit_first_harmonic(t, np.full_like(t, 3.25), 1.0)
    assert (fit.Theta, fit.psi) == (0.0, 0.0)
    assert fit.C == pytest.approx(3.25, abs=1e-13)


def test_fit_rejects_third_harmonic():
    t = np.arange(0, 3 * 2 * math.pi, 1e-3)
    fit = fit_first_harmonic(t, np.cos(t) + 0.05 * np.cos(3 * t), 1.0)
    assert abs(fit.Theta - 1) < 1e-3


def test_fit_needs_a_full_period():
    t = np.linspace(0, 3, 300)
    with pytest.raises(ValueError):
        fit_first_harmonic(t, np.cos(t), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(-3.1, 3.1), st.floats(-2, 2), st.floats(0.5, 3))
def test_fit_recovers_random_harmonics(amp, psi, c, w):
    t = np.arange(0, 2 * 2 * math.pi / w + 0.5, 1e-3)
    fit = fit_first_harmonic(t, amp * np.cos(w * t - psi) + c, w)
    assert fit.Theta == pytest.approx(amp, abs=1e-9)
    assert math.cos(fit.psi - psi) == pytest.approx(1.0, abs=1e-9)
    assert fit.C == pytest.approx(c, abs=1e-9)


def test_fit_type_invariants():
    with pytest.raises(ValueError):
        FirstHarmonicFit(-1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        FirstHarmonicFit(1.0, -math.pi, 0.0, 1.0)


def test_trajectory_validation_and_immutability():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.1, 0.3], np.zeros((3, 1)), 0.1)
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.1], np.zeros((3, 1)), 0.1)
    tr = Trajectory([0.0, 0.1], np.zeros((2, 2)), 0.1, ("a", "b"))
    with pytest.raises(ValueError):
        tr.states[0, 0] = 1.0
