"""Scripted style drivers: speed planning, control law, preset files."""

import math

import numpy as np
import pytest

from styleforge.errors import DataError
from styleforge.evalkit import make_preset_policy, rollout
from styleforge.simcore import VehicleParams, VehicleState, track_frame
from styleforge.styledriver import (A_LAT_MAX, StyleController, StyleParams,
                                    StylePreset, format_preset, parse_preset,
                                    plan_target_speed, speed_limit)

NEUTRAL = StyleParams(target_speed=20.0, curve_speed_factor=1.0,
                      anticipation_distance=100.0, throttle_kp=0.5,
                      brake_kp=0.5, max_jerk=2.0, lookahead=12.0)


def frame_at(geom, s, offset=0.0, heading_delta=0.0, speed=0.0):
    x, y = geom.point_at(s)
    h = geom.heading_at(s)
    if offset:
        x -= offset * math.sin(h)
        y += offset * math.cos(h)
    state = VehicleState(x=x, y=y, heading=h + heading_delta, speed=speed)
    return state, track_frame(state, geom)


# -- speed limits and planning ----------------------------------------------

def test_speed_limit_closed_form():
    assert speed_limit(0.0, NEUTRAL) == 20.0
    # comfort bound: v = sqrt(a_lat_max * R); R = 75 -> sqrt(225) = 15 exactly
    assert speed_limit(1.0 / 75.0, NEUTRAL) == pytest.approx(
        math.sqrt(A_LAT_MAX * 75.0))
    assert speed_limit(1.0 / 75.0, NEUTRAL) == pytest.approx(15.0)
    assert speed_limit(-1.0 / 75.0, NEUTRAL) == pytest.approx(15.0)
    # a very gentle curve does not limit below the target
    assert speed_limit(1e-5, NEUTRAL) == 20.0


def test_speed_limit_factor_scales():
    careful = StyleParams(**{**NEUTRAL.__dict__, "curve_speed_factor": 0.8})
    assert speed_limit(1.0 / 75.0, careful) == pytest.approx(0.8 * 15.0)


def test_plan_sees_corner_only_within_anticipation(test_geom):
    # test track: opening straight [0, 450) then a left arc of radius 75
    far = StyleParams(**{**NEUTRAL.__dict__, "anticipation_distance": 140.0})
    near = StyleParams(**{**NEUTRAL.__dict__, "anticipation_distance": 18.0})
    _, frame = frame_at(test_geom, 350.0)
    assert plan_target_speed(frame, far) == pytest.approx(15.0)   # 350+140 >= 450
    assert plan_target_speed(frame, near) == 20.0                 # 350+18 < 450
    _, frame = frame_at(test_geom, 433.0)
    assert plan_target_speed(frame, near) == pytest.approx(15.0)  # 433+18 >= 450
    _, frame = frame_at(test_geom, 460.0)                         # inside the arc
    assert plan_target_speed(frame, near) == pytest.approx(15.0)


def test_plan_includes_window_endpoint(test_geom):
    # anticipation 101 from s=349: the 2 m grid stops at 448 but the endpoint
    # 349+101=450 touches the corner
    p = StyleParams(**{**NEUTRAL.__dict__, "anticipation_distance": 101.0})
    _, frame = frame_at(test_geom, 349.0)
    assert plan_target_speed(frame, p) == pytest.approx(15.0)


# -- controller --------------------------------------------------------------

def test_controller_accelerates_on_straight(test_geom, vehicle):
    c = StyleController(NEUTRAL, vehicle)
    state, frame = frame_at(test_geom, 10.0, speed=5.0)
    a = c.control(state, frame, 0.05)
    assert a.throttle > 0.0 and a.brake == 0.0
    assert abs(a.steering) < 1e-6


def test_controller_brakes_when_too_fast(test_geom, vehicle):
    c = StyleController(NEUTRAL, vehicle)
    state, frame = frame_at(test_geom, 10.0, speed=28.0)
    a = None
    for _ in range(40):     # let the jerk limit wind the demand down
        a = c.control(state, frame, 0.05)
    assert a.brake > 0.0 and a.throttle == 0.0


def test_throttle_brake_never_overlap(test_geom, vehicle):
    # structural property of the inversion: one of the two is always zero
    c = StyleController(NEUTRAL, vehicle)
    for s in np.linspace(0.0, test_geom.total_length, 60, endpoint=False):
        for v in (0.0, 10.0, 25.0):
            state, frame = frame_at(test_geom, float(s), speed=v)
            a = c.control(state, frame, 0.05)
            assert a.throttle == 0.0 or a.brake == 0.0


def test_jerk_limit_bounds_demand_rate(test_geom, vehicle):
    p = StyleParams(**{**NEUTRAL.__dict__, "max_jerk": 1.5})
    c = StyleController(p, vehicle)
    state, frame = frame_at(test_geom, 10.0, speed=0.0)
    prev = c.accel_command
    for _ in range(50):
        c.control(state, frame, 0.05)
        assert abs(c.accel_command - prev) <= 1.5 * 0.05 + 1e-12
        prev = c.accel_command


def test_steering_corrects_lateral_offset(test_geom, vehicle):
    c = StyleController(NEUTRAL, vehicle)
    # offset to the left of the centerline: pure pursuit steers right (negative)
    state, frame = frame_at(test_geom, 100.0, offset=1.5, speed=10.0)
    assert c.control(state, frame, 0.05).steering < 0.0
    state, frame = frame_at(test_geom, 100.0, offset=-1.5, speed=10.0)
    assert c.control(state, frame, 0.05).steering > 0.0


def test_steering_turns_into_curve(test_geom, vehicle):
    c = StyleController(NEUTRAL, vehicle)
    state, frame = frame_at(test_geom, 500.0, speed=10.0)   # inside left arc
    assert c.control(state, frame, 0.05).steering > 0.0


def test_reset_clears_jerk_state(test_geom, vehicle):
    c = StyleController(NEUTRAL, vehicle)
    state, frame = frame_at(test_geom, 10.0, speed=28.0)
    for _ in range(30):
        c.control(state, frame, 0.05)
    assert c.accel_command < 0.0
    c.reset()
    assert c.accel_command == 0.0


def test_inversion_realizes_demand_exactly(test_geom, vehicle):
    # applying the returned throttle reproduces the demanded accel through
    # the longitudinal dynamics (discrete step, no clamping active)
    from styleforge.simcore import step
    c = StyleController(NEUTRAL, vehicle)
    state, frame = frame_at(test_geom, 10.0, speed=8.0)
    a = c.control(state, frame, 0.05)
    demanded = c.accel_command
    nxt = step(state, a, vehicle, 0.05)
    realized = (nxt.speed - state.speed) / 0.05
    assert realized == pytest.approx(demanded, abs=1e-9)


# -- closed-loop behavior ----------------------------------------------------

def test_preset_policy_tracks_lane_and_speed(test_geom, preset_a, vehicle):
    traj = rollout(make_preset_policy(preset_a, vehicle), test_geom,
                   target_speed=20.0, max_steps=2500, dt=0.05, laps=0.5)
    assert not traj.failed
    assert np.max(np.abs(traj.cte)) < 0.5
    # reaches and holds the straight-line target
    straight = traj.speeds[(traj.sections == 0) & (traj.times > 10.0)]
    assert straight.max() == pytest.approx(20.0, abs=0.3)


def test_preset_b_is_the_aggressive_one(preset_a, preset_b):
    a, b = preset_a.params, preset_b.params
    assert b.throttle_kp > a.throttle_kp
    assert b.brake_kp > a.brake_kp
    assert b.max_jerk > a.max_jerk
    assert b.anticipation_distance < a.anticipation_distance
    assert a.target_speed == b.target_speed == 20.0


def test_with_target_changes_only_target(preset_a):
    p = preset_a.params.with_target(25.0)
    assert p.target_speed == 25.0
    assert p.anticipation_distance == preset_a.params.anticipation_distance
    assert p.throttle_kp == preset_a.params.throttle_kp


# -- preset files ------------------------------------------------------------

PRESET_TEXT = """\
# demo preset
version 1
name demo
target_speed 18.0
curve_speed_factor 0.9
anticipation_distance 60
throttle_kp 0.5
brake_kp 0.6
max_jerk 2.5
lookahead 11
"""


def test_parse_format_round_trip():
    p = parse_preset(PRESET_TEXT)
    assert p.name == "demo"
    assert p.params.target_speed == 18.0
    assert parse_preset(format_preset(p)) == p


def test_parse_errors():
    with pytest.raises(DataError, match="version"):
        parse_preset("name x\ntarget_speed 10\n")
    with pytest.raises(DataError, match="line 2"):
        parse_preset("version 1\nwobble 3\n")
    with pytest.raises(DataError, match="missing fields"):
        parse_preset("version 1\nname x\ntarget_speed 10\n")
    with pytest.raises(DataError, match="line 3"):
        parse_preset("version 1\nname x\ntarget_speed banana\n")


def test_params_validation():
    with pytest.raises(ValueError, match="positive"):
        StyleParams(**{**NEUTRAL.__dict__, "target_speed": 0.0})
    with pytest.raises(ValueError, match="curve_speed_factor"):
        StyleParams(**{**NEUTRAL.__dict__, "curve_speed_factor": 1.2})
    with pytest.raises(ValueError, match="anticipation"):
        StyleParams(**{**NEUTRAL.__dict__, "anticipation_distance": 600.0})


def test_fixture_presets_parse_back(preset_a, preset_b):
    assert parse_preset(format_preset(preset_a)) == preset_a
    assert parse_preset(format_preset(preset_b)) == preset_b
    assert isinstance(preset_a, StylePreset)
