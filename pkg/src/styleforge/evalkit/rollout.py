"""Closed-loop rollouts.

A policy is either vision-driven (wants_observation=True: called with the
rendered observation and current speed) or an oracle controller
(wants_observation=False: called with the vehicle state, track frame, and dt;
rendering is skipped entirely, which makes scripted rollouts fast).

The trajectory records, per tick: time, pose, speed, applied action, arc
length (wrapped and unwrapped), cross-track error, curvature, section tag.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..autodiff.serialize import digest_bytes
from ..errors import OffTrackError
from ..simcore import (ActionTriple, CameraConfig, TrackGeometry, VehicleParams,
                       VehicleState, render_observation, step, track_frame)
from ..styledriver import StyleController, StylePreset, plan_target_speed


@dataclass
class Trajectory:
    track: str
    policy_name: str
    target_speed: float
    dt: float
    times: np.ndarray          # (N,)
    states: np.ndarray         # (N, 4): x, y, heading, speed
    actions: np.ndarray        # (N, 3): steering, throttle, brake
    s: np.ndarray              # (N,) wrapped arc length
    unwrapped_s: np.ndarray    # (N,) monotone arc length
    cte: np.ndarray            # (N,) signed cross-track error
    curvatures: np.ndarray     # (N,) signed centerline curvature at s
    sections: np.ndarray       # (N,) uint8 section tags
    completed: bool = False
    failed: bool = False
    fail_reason: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def speeds(self) -> np.ndarray:
        return self.states[:, 3]

    @property
    def laps(self) -> float:
        return float(self.unwrapped_s[-1] - self.unwrapped_s[0]) if len(self) else 0.0

    def pack(self) -> bytes:
        head = (f"{self.track}|{self.policy_name}|{self.target_speed!r}|"
                f"{self.dt!r}|{self.completed}|{self.failed}").encode()
        parts = [struct.pack("<I", len(head)), head]
        for arr in (self.times, self.states, self.actions, self.s,
                    self.unwrapped_s, self.cte, self.curvatures):
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(self.sections, dtype=np.uint8).tobytes())
        return b"".join(parts)

    def digest(self) -> str:
        return digest_bytes(self.pack())


def make_preset_policy(preset: StylePreset, vehicle: Optional[VehicleParams] = None,
                       target_speed: Optional[float] = None):
    """Oracle policy closure around a style controller."""
    vehicle = vehicle or VehicleParams()
    params = preset.params if target_speed is None else preset.params.with_target(target_speed)
    controller = StyleController(params, vehicle)

    def policy(state: VehicleState, frame, dt: float) -> ActionTriple:
        return controller.control(state, frame, dt)

    policy.wants_observation = False
    policy.name = f"preset-{preset.name}"
    policy.reset = controller.reset
    return policy


def rollout(policy: Callable, geom: TrackGeometry, *, target_speed: float,
            max_steps: int, dt: float = 0.05, laps: Optional[float] = None,
            camera: Optional[CameraConfig] = None,
            vehicle: Optional[VehicleParams] = None,
            start_s: float = 0.0, start_speed: Optional[float] = None,
            start_offset: float = 0.0) -> Trajectory:
    """Run a policy for max_steps ticks or until `laps` laps are complete.

    Leaving the road corridor marks the trajectory failed and truncates it;
    merely drifting inside the corridor is recorded, not punished.
    """
    vehicle = vehicle or VehicleParams()
    wants_obs = bool(getattr(policy, "wants_observation", True))
    if wants_obs and camera is None:
        camera = CameraConfig()
    if hasattr(policy, "reset"):
        policy.reset()

    x0, y0 = geom.point_at(start_s)
    h0 = geom.heading_at(start_s)
    if start_offset:
        x0 -= start_offset * np.sin(h0)
        y0 += start_offset * np.cos(h0)
    state = VehicleState(x=x0, y=y0, heading=h0, speed=0.0)
    if start_speed is None:
        frame0 = track_frame(state, geom)
        start_speed = min(target_speed,
                          plan_target_speed(frame0, _plan_params(target_speed)))
    state = VehicleState(x=x0, y=y0, heading=h0,
                         speed=min(start_speed, vehicle.max_speed))

    n = max_steps
    times = np.empty(n)
    states = np.empty((n, 4))
    actions = np.empty((n, 3))
    s_arr = np.empty(n)
    us_arr = np.empty(n)
    cte = np.empty(n)
    curv = np.empty(n)
    sections = np.empty(n, dtype=np.uint8)

    goal = laps * geom.total_length if laps is not None else None
    unwrapped = 0.0
    prev_s = None
    failed = False
    reason = ""
    k = 0
    for k in range(max_steps):
        try:
            frame = track_frame(state, geom)
        except OffTrackError as exc:
            failed = True
            reason = f"left the road corridor at t={k * dt:.2f}s: {exc}"
            break
        if prev_s is None:
            unwrapped = 0.0
        else:
            ds = (frame.s - prev_s) % geom.total_length
            if ds > geom.total_length / 2.0:
                ds -= geom.total_length
            unwrapped += ds
        prev_s = frame.s

        if wants_obs:
            obs = render_observation(state, geom, camera)
            action = policy(obs, state.speed)
        else:
            action = policy(state, frame, dt)

        times[k] = k * dt
        states[k] = (state.x, state.y, state.heading, state.speed)
        actions[k] = action.as_tuple()
        s_arr[k] = frame.s
        us_arr[k] = unwrapped
        cte[k] = frame.cross_track_error
        curv[k] = geom.curvature_at(frame.s)
        sections[k] = frame.section

        state = step(state, action, vehicle, dt)
        if goal is not None and unwrapped >= goal:
            k += 1
            break
    else:
        k = max_steps

    m = k if failed else min(k, max_steps)
    completed = goal is not None and not failed and unwrapped >= goal
    return Trajectory(
        track=geom.name, policy_name=getattr(policy, "name", "policy"),
        target_speed=target_speed, dt=dt,
        times=times[:m].copy(), states=states[:m].copy(), actions=actions[:m].copy(),
        s=s_arr[:m].copy(), unwrapped_s=us_arr[:m].copy(), cte=cte[:m].copy(),
        curvatures=curv[:m].copy(), sections=sections[:m].copy(),
        completed=completed, failed=failed, fail_reason=reason,
        meta={"laps_requested": laps, "max_steps": max_steps,
              "track_length": geom.total_length,
              "lane_half_width": geom.lane_half_width})


def _plan_params(target_speed: float):
    # a neutral parameter set used only to pick a sane starting speed
    from ..styledriver import StyleParams
    return StyleParams(target_speed=target_speed, curve_speed_factor=1.0,
                       anticipation_distance=1.0, throttle_kp=0.5, brake_kp=0.5,
                       max_jerk=2.0, lookahead=10.0)
