import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quaddelivery.dynamics import (GimbalProximity, QuadParams, QuadState, Torque,
                                   angular_acceleration, motor_forces, step, step_vector,
                                   translational_acceleration)

P = QuadParams()


def test_symmetric_inertia_has_no_gyroscopic_term():
    p = QuadParams(ixx=0.1, iyy=0.1, izz=0.1)
    acc = angular_acceleration((0.0, 1.0, 1.0), Torque(0.01, 0.0, 0.0), p)
    assert acc == pytest.approx([0.1, 0.0, 0.0], abs=1e-15)


def test_zero_inputs():
    assert np.all(angular_acceleration((0, 0, 0), Torque(), P) == 0)


def test_gyroscopic_coupling():
    p = QuadParams(ixx=0.1, iyy=0.2, izz=0.3)
    acc = angular_acceleration((1.0, 1.0, 1.0), Torque(), p)
    assert acc == pytest.approx([-1.0, 1.0, -1.0 / 3.0], rel=1e-12)


def test_hover_and_free_fall_acceleration():
    assert translational_acceleration((0, 0, 0), P.mass * P.g, P) == pytest.approx([0, 0, 0], abs=1e-15)
    assert translational_acceleration((0, 0, 0), 0.0, P) == pytest.approx([0, 0, -P.g])


def test_rolled_thrust():
    a = translational_acceleration((math.pi / 6, 0.0, 0.0), P.mass * P.g, P)
    assert a == pytest.approx([0.0, -P.g / 2, P.g * (math.cos(math.pi / 6) - 1)], abs=1e-12)


def test_equal_speeds_give_pure_thrust():
    thrust, tau = motor_forces((400.0,) * 4, P)
    assert thrust == pytest.approx(4 * P.k_thrust * 400.0 ** 2)
    assert tau.as_array() == pytest.approx([0, 0, 0], abs=1e-15)


def test_left_up_right_down_is_pure_roll():
    h = P.hover_speed
    dl = math.sqrt(h * h + 1000) - h
    dr = h - math.sqrt(h * h - 1000)
    _, tau = motor_forces((h, h + dl, h, h - dr), P)
    assert tau.roll > 0
    assert tau.pitch == pytest.approx(0.0, abs=1e-15) and tau.yaw == pytest.approx(0.0, abs=1e-12)


def test_motor_substitution():
    p = QuadParams(k_thrust=1.0, b_drag=0.1, arm_length=0.5)
    thrust, tau = motor_forces((1.0, 2.0, 3.0, 4.0), p)
    assert thrust == 30.0
    assert (tau.roll, tau.pitch) == (-6.0, 4.0)
    assert tau.yaw == pytest.approx(-1.0)


speeds = st.tuples(*[st.floats(0, 600, allow_nan=False)] * 4)


@given(speeds, speeds, st.floats(0, 1))
def test_motor_forces_linear_in_squares(a, b, lam):
    # mix the squared speeds convexly and compare with the mixed outputs
    mixed = tuple(math.sqrt(lam * x * x + (1 - lam) * y * y) for x, y in zip(a, b))
    ta, qa = motor_forces(a, P)
    tb, qb = motor_forces(b, P)
    tm, qm = motor_forces(mixed, P)
    assert tm == pytest.approx(lam * ta + (1 - lam) * tb, rel=1e-9, abs=1e-9)
    assert qm.as_array() == pytest.approx(lam * qa.as_array() + (1 - lam) * qb.as_array(), rel=1e-9, abs=1e-9)


@given(speeds)
def test_motor_forces_even_in_sign(a):
    flipped = tuple(-x for x in a)
    t1, q1 = motor_forces(a, P)
    t2, q2 = motor_forces(flipped, P)
    assert t1 == t2 and np.array_equal(q1.as_array(), q2.as_array())


def test_hover_is_fixed_point():
    s = QuadState(position=(1.0, 2.0, 3.0))
    for _ in range(100):
        nxt = step(s, (P.hover_speed,) * 4, 0.002, P)
        assert np.max(np.abs(nxt.as_vector() - s.as_vector())) < 1e-12
        s = nxt


def test_free_fall():
    vec = QuadState(position=(0.0, 0.0, 100.0)).as_vector()
    dt = 0.01
    for _ in range(200):
        vec = step_vector(vec, (0.0,) * 4, dt, P)
    assert vec[2] == pytest.approx(100.0 - 0.5 * P.g * 2.0 ** 2, abs=1e-9)
    assert vec[5] == pytest.approx(-P.g * 2.0, abs=1e-9)


def test_gimbal_proximity_raised():
    near = QuadState(euler=(0.0, math.pi / 2 - 1e-4, 0.0))
    with pytest.raises(GimbalProximity):
        step(near, (P.hover_speed,) * 4, 1e-3, P)


def test_linear_drag_opposes_velocity():
    p = QuadParams(linear_drag=0.5)
    a = translational_acceleration((0, 0, 0), p.mass * p.g, p, velocity=(2.0, 0.0, 0.0))
    assert a[0] == pytest.approx(-0.5 * 2.0 / p.mass)


@pytest.mark.parametrize("kwargs", [
    dict(mass=0.0), dict(ixx=1.0, iyy=0.1, izz=0.1), dict(omega_min=700.0), dict(linear_drag=-1.0),
])
def test_bad_params(kwargs):
    with pytest.raises(ValueError):
        QuadParams(**kwargs)


def test_state_rejects_non_finite():
    with pytest.raises(ValueError):
        QuadState.from_vector([math.nan] + [0.0] * 11)


def test_default_airframe():
    assert P.mass == 1.2 and (P.ixx, P.iyy, P.izz) == (5e-3, 5e-3, 1e-2)
    assert P.arm_length == 0.25 and P.g == 9.81
    assert 1.5 <= P.thrust_to_weight <= 2.0
