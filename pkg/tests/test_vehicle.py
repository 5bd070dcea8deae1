"""Vehicle dynamics: clamps, closed forms, steady states, turning circle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from styleforge.simcore import ActionTriple, VehicleParams, VehicleState, step

DT = 0.05


def drive(state, action, params, steps, dt=DT):
    for _ in range(steps):
        state = step(state, action, params, dt)
    return state


def test_rest_stays_at_rest():
    p = VehicleParams()
    s0 = VehicleState(x=1.0, y=2.0, heading=0.3, speed=0.0)
    s1 = drive(s0, ActionTriple(), p, steps=100)
    assert (s1.x, s1.y, s1.heading, s1.speed) == (s0.x, s0.y, s0.heading, 0.0)


def test_full_throttle_approaches_terminal_speed():
    p = VehicleParams()
    s = VehicleState(0, 0, 0, 0)
    speeds = []
    for _ in range(4000):
        s = step(s, ActionTriple(throttle=1.0), p, DT)
        speeds.append(s.speed)
    speeds = np.array(speeds)
    assert np.all(np.diff(speeds) >= -1e-12)       # monotone approach
    assert np.all(speeds <= p.max_speed)
    # terminal speed solves g (1 - v/vmax) = c v  =>  v = g vmax / (g + c vmax)
    v_term = p.throttle_gain * p.max_speed / (p.throttle_gain
                                              + p.drag_coeff * p.max_speed)
    assert speeds[-1] == pytest.approx(v_term, rel=1e-6)


def test_coast_decays_exponentially():
    p = VehicleParams()
    s = VehicleState(0, 0, 0, 20.0)
    n = 200
    s = drive(s, ActionTriple(), p, steps=n)
    # discrete drag: v_{k+1} = v_k (1 - c dt)
    assert s.speed == pytest.approx(20.0 * (1.0 - p.drag_coeff * DT) ** n, rel=1e-12)


def test_brake_stops_and_holds():
    p = VehicleParams()
    s = VehicleState(0, 0, 0, 10.0)
    s = drive(s, ActionTriple(brake=1.0), p, steps=100)
    assert s.speed == 0.0
    s2 = step(s, ActionTriple(brake=1.0), p, DT)
    assert s2.speed == 0.0                          # clamped, never negative
    assert s2.x == s.x and s2.y == s.y


def test_straight_line_distance_discrete_closed_form():
    # with zero drag-free forces, x advances by dt * sum of speeds
    p = VehicleParams()
    s = VehicleState(0, 0, 0, 15.0)
    total = 0.0
    cur = s
    for _ in range(50):
        total += cur.speed * DT
        cur = step(cur, ActionTriple(), p, DT)
    assert cur.x == pytest.approx(total, rel=1e-12)
    assert cur.y == 0.0


def test_action_clamps():
    a = ActionTriple(steering=2.0, throttle=-1.0, brake=7.0)
    assert a.as_tuple() == (1.0, 0.0, 1.0)
    a = ActionTriple(steering=-3.0, throttle=0.5, brake=-0.2)
    assert a.as_tuple() == (-1.0, 0.5, 0.0)


def test_negative_speed_clamped_in_state():
    s = VehicleState(0, 0, 0, -5.0)
    assert s.speed == 0.0


def test_heading_stays_wrapped():
    p = VehicleParams()
    s = VehicleState(0, 0, 3.0, 20.0)
    for _ in range(500):
        s = step(s, ActionTriple(steering=1.0, throttle=0.5), p, DT)
        assert -math.pi < s.heading <= math.pi


def test_dt_validation():
    p = VehicleParams()
    s = VehicleState(0, 0, 0, 5.0)
    with pytest.raises(ValueError):
        step(s, ActionTriple(), p, 0.0)
    with pytest.raises(ValueError):
        step(s, ActionTriple(), p, 0.2)


def test_param_validation():
    with pytest.raises(ValueError):
        VehicleParams(wheelbase=0.0)
    with pytest.raises(ValueError):
        VehicleParams(max_steer=math.pi / 2)


def hold_speed_throttle(v, p):
    """Throttle that exactly cancels drag at speed v (below terminal speed)."""
    return p.drag_coeff * v / (p.throttle_gain * (1.0 - v / p.max_speed))


def test_turning_circle_radius_matches_bicycle_model():
    # constant steering at constant speed traces a circle of radius
    # R = wheelbase / tan(steer * max_steer)
    p = VehicleParams()
    v = 10.0
    for cmd in (0.3, 0.6, -0.45):
        expected_R = p.wheelbase / math.tan(abs(cmd) * p.max_steer)
        s = VehicleState(0, 0, 0, v)
        a = ActionTriple(steering=cmd, throttle=hold_speed_throttle(v, p))
        xs, ys = [], []
        for _ in range(3000):
            s = step(s, a, p, 0.01)
            xs.append(s.x)
            ys.append(s.y)
        xs, ys = np.array(xs), np.array(ys)
        # algebraic circle fit (Kasa): solve for center and radius
        A = np.column_stack([2 * xs, 2 * ys, np.ones_like(xs)])
        b = xs ** 2 + ys ** 2
        (cx, cy, c), *_ = np.linalg.lstsq(A, b, rcond=None)
        R_fit = math.sqrt(c + cx ** 2 + cy ** 2)
        assert R_fit == pytest.approx(expected_R, rel=0.01)


def test_steady_lateral_acceleration_on_circle():
    # on that circle the centripetal acceleration is v^2 / R
    p = VehicleParams()
    v, cmd = 12.0, 0.5
    R = p.wheelbase / math.tan(cmd * p.max_steer)
    s = VehicleState(0, 0, 0, v)
    a = ActionTriple(steering=cmd, throttle=hold_speed_throttle(v, p))
    yaw_rates = []
    for _ in range(400):
        before = s.heading
        s = step(s, a, p, 0.01)
        d = s.heading - before
        d = (d + math.pi) % (2 * math.pi) - math.pi
        yaw_rates.append(d / 0.01)
    a_lat = np.mean(yaw_rates) * v    # omega * v
    assert a_lat == pytest.approx(v ** 2 / R, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-0.5, 1.5), st.floats(-0.5, 1.5),
       st.floats(0.0, 35.0))
def test_property_speed_bounds(steer, throttle, brake, v0):
    p = VehicleParams()
    s = VehicleState(0, 0, 0, v0)
    for _ in range(20):
        s = step(s, ActionTriple(steer, throttle, brake), p, DT)
        assert 0.0 <= s.speed <= p.max_speed
