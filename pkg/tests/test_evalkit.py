"""Trajectory analysis: hulls, G-G clouds, curve events, reports, rollouts."""

import json

import numpy as np
import pytest

from styleforge.evalkit import (CSV_HEADER, Trajectory, compute_metrics,
                                convex_hull, curve_events, curve_gg,
                                distance_to_target_speed, emit_report,
                                exit_distances, gg_points, gg_summary,
                                hull_area, make_preset_policy, rollout,
                                trajectory_csv)
from styleforge.simcore import ActionTriple


def make_traj(v, sections, dt=0.05, target=20.0, curvatures=None, us=None,
              **kw):
    v = np.asarray(v, dtype=np.float64)
    n = len(v)
    sections = np.asarray(sections, dtype=np.uint8)
    if us is None:
        # arc length accumulated *before* each sample, like the simulator
        us = np.concatenate([[0.0], np.cumsum(v[:-1] * dt)])
    return Trajectory(
        track="synth", policy_name="synth", target_speed=target, dt=dt,
        times=np.arange(n) * dt, states=np.column_stack(
            [np.zeros(n), np.zeros(n), np.zeros(n), v]),
        actions=np.zeros((n, 3)), s=us % 1000.0, unwrapped_s=us,
        cte=np.zeros(n),
        curvatures=np.zeros(n) if curvatures is None else np.asarray(curvatures),
        sections=sections, **kw)


# -- convex hull oracles -----------------------------------------------------

def test_hull_of_square_with_interior_points():
    pts = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1],
                    [0.5, 0.5], [0.25, 0.75], [0.9, 0.1]])
    hull = convex_hull(pts)
    assert len(hull) == 4
    assert {tuple(p) for p in hull} == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert hull_area(pts) == pytest.approx(1.0)


def test_hull_pentagon_shoelace():
    # shoelace by hand: ((0,0),(2,0),(3,2),(1,3),(-1,2)) -> area 8
    corners = np.array([[0.0, 0], [2, 0], [3, 2], [1, 3], [-1, 2]])
    cloud = np.vstack([corners, [[1.0, 1.0], [0.5, 0.5], [2.0, 1.0]]])
    assert hull_area(cloud) == pytest.approx(8.0)
    assert len(convex_hull(cloud)) == 5


def test_hull_degenerate_sets():
    assert hull_area(np.array([[2.0, 3.0]])) == 0.0
    assert hull_area(np.array([[0.0, 0], [1, 1], [2, 2], [3, 3]])) == 0.0
    assert len(convex_hull(np.array([[0.0, 0], [1, 1], [2, 2]]))) == 2
    # duplicates collapse
    assert hull_area(np.array([[0.0, 0], [0, 0], [1, 0], [1, 0]])) == 0.0


def test_hull_is_ccw():
    rng = np.random.default_rng(4)
    hull = convex_hull(rng.standard_normal((60, 2)))
    for i in range(len(hull)):
        o, a, b = hull[i - 2], hull[i - 1], hull[i]
        cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        assert cross > 0.0


def test_hull_area_rotation_invariant():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((200, 2))
    th = 0.7
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert hull_area(pts @ rot.T) == pytest.approx(hull_area(pts), rel=1e-9)


# -- G-G points --------------------------------------------------------------

def test_gg_points_linear_ramp_exact():
    # v = 2 + 3t: every difference scheme recovers a_long = 3 exactly
    dt = 0.1
    v = 2.0 + 3.0 * np.arange(8) * dt
    traj = make_traj(v, np.zeros(8), dt=dt, curvatures=np.full(8, 0.02))
    pts = gg_points(traj)
    np.testing.assert_allclose(pts[:, 0], 3.0, rtol=1e-12)
    np.testing.assert_allclose(pts[:, 1], v * v * 0.02, rtol=1e-12)


def test_gg_points_needs_three_steps():
    with pytest.raises(ValueError, match="at least 3"):
        gg_points(make_traj([1.0, 2.0], [0, 0]))


def test_gg_summary_and_curve_hull():
    v = np.full(40, 10.0)
    sections = np.array([0] * 20 + [1] * 20)
    curv = np.concatenate([np.zeros(20), np.full(20, 1 / 50.0)])
    traj = make_traj(v, sections, curvatures=curv)
    summary = gg_summary(traj)
    assert summary["straight"]["count"] == 20
    assert summary["left"]["a_lat_max"] == pytest.approx(100.0 / 50.0)
    pts, area = curve_gg(traj)
    assert len(pts) == 20
    # constant speed & curvature: the curve cloud collapses to ~2 points
    assert area == pytest.approx(0.0, abs=1e-9)


# -- curve events ------------------------------------------------------------

def test_curve_events_synthetic():
    sections = [0, 0, 1, 1, 1, 0, 0, 2, 2]
    v = [10, 11, 9, 8, 7, 12, 13, 9, 8]
    evs = curve_events(make_traj(v, sections))
    assert len(evs) == 2
    assert evs[0].entry_index == 1 and evs[0].exit_index == 5
    assert evs[0].entry_speed == 11.0 and evs[0].min_speed == 7.0
    assert evs[1].entry_index == 6 and evs[1].exit_index == -1  # truncated
    assert evs[1].min_speed == 8.0


def test_no_events_on_all_straight():
    assert curve_events(make_traj(np.full(10, 5.0), np.zeros(10))) == []


# -- distance to target speed ------------------------------------------------

def test_distance_constant_acceleration_closed_form():
    # accelerate 10 -> 20 m/s at a = 2 m/s^2: d = (v_t^2 - v_0^2) / (2a) = 75 m
    dt, a, v0, target, tol = 0.05, 2.0, 10.0, 20.0, 0.25
    v = np.minimum(v0 + a * np.arange(400) * dt, target)
    traj = make_traj(v, np.zeros(400), dt=dt, target=target)
    res = distance_to_target_speed(traj, 0, target, tol=tol)
    assert res.reached
    # first sample inside the band, independently derived
    k = int(np.ceil((target - tol - v0) / (a * dt)))
    expected = float(traj.unwrapped_s[k])
    assert res.distance == pytest.approx(expected)
    assert (target - tol) ** 2 / (2 * a) - 100.0 / (2 * a) <= res.distance <= 75.0
    assert res.max_speed == 20.0


def test_distance_unreachable_target():
    v = np.full(50, 12.0)
    res = distance_to_target_speed(make_traj(v, np.zeros(50)), 0, 30.0)
    assert not res.reached
    assert res.distance == float("inf")
    assert res.max_speed == 12.0


def test_distance_requires_sustained_window():
    # a 5-sample touch of the band must not count against a 20-sample window
    v = np.concatenate([np.full(10, 30.0), np.full(5, 20.0), np.full(5, 25.0),
                        np.full(40, 20.0)])
    traj = make_traj(v, np.zeros(60), dt=0.05)
    res = distance_to_target_speed(traj, 0, 20.0, tol=0.25, sustain=1.0)
    assert res.reached
    assert res.distance == pytest.approx(float(traj.unwrapped_s[20]))


def test_distance_rejects_bad_index():
    with pytest.raises(ValueError, match="outside"):
        distance_to_target_speed(make_traj(np.ones(5), np.zeros(5)), 9, 10.0)


def test_exit_distances_min_straight_filter():
    # curve A exits into 100 m of straight, curve B into ~400 m
    sections = np.array([0] * 50 + [1] * 20 + [0] * 100 + [1] * 20 + [0] * 400)
    v = np.full(len(sections), 20.0)
    traj = make_traj(v, sections, dt=0.05, target=20.0)
    assert len(exit_distances(traj, 20.0)) == 2
    filtered = exit_distances(traj, 20.0, min_straight=350.0)
    assert len(filtered) == 1
    assert filtered[0].event_index == 190  # curve B's exit sample
    assert filtered[0].reached and filtered[0].distance == 0.0


def test_compute_metrics_fields():
    sections = np.array([0] * 50 + [1] * 20 + [0] * 100)
    v = np.full(len(sections), 15.0)
    traj = make_traj(v, sections, target=15.0)
    traj.meta["track_length"] = 1000.0
    rep = compute_metrics(traj)
    assert rep.curve_entry_speeds == [15.0]
    assert rep.exit_distances_reached == [0.0]
    assert rep.mean_exit_distance == 0.0
    assert rep.max_abs_cte == 0.0
    assert rep.mean_speed == 15.0
    assert rep.laps == pytest.approx(traj.unwrapped_s[-1] / 1000.0)
    d = rep.to_dict()
    assert d["policy"] == "synth" and "gg" in d


# -- report emission ---------------------------------------------------------

def test_trajectory_csv_golden():
    traj = make_traj([2.0, 2.5], [0, 1], dt=0.5, curvatures=[0.0, 0.01])
    expected = (CSV_HEADER + "\n"
                "0.0,0.0,0.0,0.0,2.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,straight\n"
                "0.5,0.0,0.0,0.0,2.5,0.0,0.0,0.0,1.0,1.0,0.0,0.01,left\n")
    assert trajectory_csv(traj) == expected


def test_emit_report_round_trip(tmp_path):
    traj = make_traj(np.full(30, 10.0), np.zeros(30))
    rep = compute_metrics(traj)
    files = emit_report(tmp_path / "out", [("run", traj, rep)])
    body = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert body["version"] == 1
    assert body["models"]["run"]["mean_speed"] == 10.0
    csv_text = open(files["run"]).read()
    assert csv_text.splitlines()[0] == CSV_HEADER
    assert len(csv_text.splitlines()) == 31
    # byte-stable re-emission
    before = (tmp_path / "out" / "summary.json").read_bytes()
    emit_report(tmp_path / "out", [("run", traj, rep)])
    assert (tmp_path / "out" / "summary.json").read_bytes() == before


# -- closed-loop rollouts ----------------------------------------------------

def test_rollout_deterministic_digest(test_geom, preset_a, vehicle):
    kw = dict(target_speed=20.0, max_steps=300, dt=0.05)
    t1 = rollout(make_preset_policy(preset_a, vehicle), test_geom, **kw)
    t2 = rollout(make_preset_policy(preset_a, vehicle), test_geom, **kw)
    assert t1.digest() == t2.digest()
    assert len(t1) == 300 and not t1.failed and not t1.completed


def test_rollout_lap_goal_completes(test_geom, preset_a, vehicle):
    traj = rollout(make_preset_policy(preset_a, vehicle), test_geom,
                   target_speed=20.0, max_steps=5000, dt=0.05, laps=0.05)
    assert traj.completed and not traj.failed
    assert traj.unwrapped_s[-1] >= 0.05 * test_geom.total_length - 25.0
    assert traj.meta["track_length"] == test_geom.total_length


def test_rollout_failure_truncates(test_geom, vehicle):
    # never steering leaves the corridor shortly after the first corner
    def bad_policy(state, frame, dt):
        return ActionTriple(steering=0.0, throttle=1.0, brake=0.0)

    bad_policy.wants_observation = False
    traj = rollout(bad_policy, test_geom, target_speed=20.0, max_steps=4000,
                   dt=0.05)
    assert traj.failed and not traj.completed
    assert "corridor" in traj.fail_reason
    assert len(traj) < 4000
    # truncation point is beyond the lane but inside where the exception hit
    assert np.abs(traj.cte).max() <= 5.0 * test_geom.lane_half_width


def test_rollout_start_options(test_geom, preset_a, vehicle):
    traj = rollout(make_preset_policy(preset_a, vehicle), test_geom,
                   target_speed=20.0, max_steps=5, dt=0.05,
                   start_s=100.0, start_speed=7.0, start_offset=1.0)
    assert traj.speeds[0] == 7.0
    assert traj.s[0] == pytest.approx(100.0, abs=1e-6)
    assert traj.cte[0] == pytest.approx(1.0, abs=1e-6)


def test_trajectory_pack_is_stable(test_geom, preset_a, vehicle):
    traj = rollout(make_preset_policy(preset_a, vehicle), test_geom,
                   target_speed=20.0, max_steps=50, dt=0.05)
    assert traj.pack() == traj.pack()
    assert len(traj.digest()) == 64  # sha256 hex
