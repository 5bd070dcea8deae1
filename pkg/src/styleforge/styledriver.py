"""Scripted parameterized drivers that demonstrate contrasting driving styles.

A driver combines pure-pursuit steering toward a lookahead point with a
proportional longitudinal law on the gap between planned and current speed.
Styles differ only in the longitudinal parameters (gains, jerk limit) and in
how early they start braking for an upcoming curve; steering is shared so the
style signal is purely acceleration/deceleration.

Two presets ship as fixtures: "A" (gentle, anticipates curves early) and
"B" (sharp, brakes late and accelerates hard).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .simcore import ActionTriple, TrackFrame, VehicleParams, VehicleState

A_LAT_MAX = 3.0         # comfort bound used to turn curvature into a speed limit, m/s^2
PLAN_STEP = 2.0         # lookahead discretization for the speed planner, meters


@dataclass(frozen=True)
class StyleParams:
    target_speed: float             # cruise speed on straights (the driver's V^g)
    curve_speed_factor: float       # scales the curvature speed limit, in (0, 1]
    anticipation_distance: float    # how early braking for a curve begins, meters
    throttle_kp: float              # m/s^2 of demanded accel per m/s of speed gap
    brake_kp: float                 # same, braking side
    max_jerk: float                 # limit on demanded accel change, m/s^3
    lookahead: float                # pure-pursuit target distance, meters

    def __post_init__(self):
        for name in ("target_speed", "curve_speed_factor", "anticipation_distance",
                     "throttle_kp", "brake_kp", "max_jerk", "lookahead"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.curve_speed_factor > 1.0:
            raise ValueError("curve_speed_factor must be in (0, 1]")
        if self.anticipation_distance > 500.0:
            raise ValueError("anticipation_distance must be <= 500 m")

    def with_target(self, target_speed: float) -> "StyleParams":
        return StyleParams(target_speed=target_speed,
                           curve_speed_factor=self.curve_speed_factor,
                           anticipation_distance=self.anticipation_distance,
                           throttle_kp=self.throttle_kp, brake_kp=self.brake_kp,
                           max_jerk=self.max_jerk, lookahead=self.lookahead)


@dataclass(frozen=True)
class StylePreset:
    name: str
    params: StyleParams


def speed_limit(curvature: float, params: StyleParams) -> float:
    """Speed allowed by a curvature value under the comfort bound."""
    if curvature == 0.0:
        return params.target_speed
    limit = params.curve_speed_factor * math.sqrt(A_LAT_MAX / abs(curvature))
    return min(params.target_speed, limit)


def plan_target_speed(frame: TrackFrame, params: StyleParams) -> float:
    """Most restrictive speed limit within the anticipation window ahead."""
    planned = speed_limit(frame.curvature_ahead(0.0), params)
    d = PLAN_STEP
    while d <= params.anticipation_distance:
        planned = min(planned, speed_limit(frame.curvature_ahead(d), params))
        d += PLAN_STEP
    planned = min(planned, speed_limit(
        frame.curvature_ahead(params.anticipation_distance), params))
    return planned


class StyleController:
    """Stateful driver: remembers the previous accel demand for jerk limiting."""

    def __init__(self, params: StyleParams, vehicle: VehicleParams):
        self.params = params
        self.vehicle = vehicle
        self._prev_accel = 0.0

    def reset(self):
        self._prev_accel = 0.0

    def control(self, state: VehicleState, frame: TrackFrame, dt: float) -> ActionTriple:
        p = self.params
        veh = self.vehicle

        # steering: pure pursuit toward the centerline point `lookahead` ahead
        tx, ty = frame.geom.point_at(frame.s + p.lookahead)
        dx = tx - state.x
        dy = ty - state.y
        dist = math.hypot(dx, dy)
        alpha = math.atan2(dy, dx) - state.heading
        if dist > 1e-6:
            steer_angle = math.atan(2.0 * veh.wheelbase * math.sin(alpha) / dist)
        else:
            steer_angle = 0.0
        steering = steer_angle / veh.max_steer

        # longitudinal: proportional accel demand, jerk limited, then inverted
        # through the longitudinal dynamics so the demand is realized
        planned = plan_target_speed(frame, p)
        gap = planned - state.speed
        desired = p.throttle_kp * gap if gap >= 0.0 else p.brake_kp * gap
        lo = self._prev_accel - p.max_jerk * dt
        hi = self._prev_accel + p.max_jerk * dt
        desired = min(max(desired, lo), hi)
        self._prev_accel = desired

        drag = veh.drag_coeff * state.speed
        if desired + drag >= 0.0:
            headroom = veh.throttle_gain * (1.0 - state.speed / veh.max_speed)
            throttle = (desired + drag) / headroom if headroom > 1e-9 else 1.0
            action = ActionTriple(steering=steering, throttle=throttle, brake=0.0)
        else:
            action = ActionTriple(steering=steering, throttle=0.0,
                                  brake=-(desired + drag) / veh.brake_gain)
        return action

    @property
    def accel_command(self) -> float:
        return self._prev_accel


# -- preset io ---------------------------------------------------------------

_FIELDS = ("target_speed", "curve_speed_factor", "anticipation_distance",
           "throttle_kp", "brake_kp", "max_jerk", "lookahead")


def parse_preset(text: str) -> StylePreset:
    values = {}
    name = None
    version = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        try:
            if key == "version":
                version = int(value)
            elif key == "name":
                name = value
            elif key in _FIELDS:
                values[key] = float(value)
            else:
                raise DataError(f"line {lineno}: unknown preset key {key!r}")
        except ValueError as exc:
            raise DataError(f"line {lineno}: cannot parse {raw!r}: {exc}") from exc
    if version != 1:
        raise DataError(f"unsupported or missing preset version: {version}")
    if name is None:
        raise DataError("preset file must set a name")
    missing = [f for f in _FIELDS if f not in values]
    if missing:
        raise DataError(f"preset {name!r} is missing fields: {', '.join(missing)}")
    return StylePreset(name=name, params=StyleParams(**values))


def format_preset(preset: StylePreset) -> str:
    lines = ["# styleforge style preset", "version 1", f"name {preset.name}"]
    for f in _FIELDS:
        lines.append(f"{f} {getattr(preset.params, f)!r}")
    return "\n".join(lines) + "\n"


def load_preset(path) -> StylePreset:
    return parse_preset(Path(path).read_text())


def save_preset(preset: StylePreset, path):
    Path(path).write_text(format_preset(preset))
