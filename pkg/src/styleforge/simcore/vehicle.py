"""Kinematic bicycle vehicle: state, parameters, actions and the step update."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .track import normalize_angle


def _clip(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float          # radians, in (-pi, pi]
    speed: float            # m/s, >= 0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))
        object.__setattr__(self, "speed", max(self.speed, 0.0))


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.7
    max_speed: float = 30.0
    max_steer: float = 0.5          # radians at steering command 1.0
    throttle_gain: float = 12.0     # m/s^2 per unit throttle at standstill
    brake_gain: float = 6.0         # m/s^2 per unit brake
    drag_coeff: float = 0.05        # 1/s

    def __post_init__(self):
        for name in ("wheelbase", "max_speed", "max_steer", "throttle_gain",
                     "brake_gain", "drag_coeff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steer >= math.pi / 2:
            raise ValueError("max_steer must be below pi/2")


@dataclass(frozen=True)
class ActionTriple:
    """(steering, throttle, brake); out-of-range inputs are clamped on construction."""

    steering: float = 0.0   # [-1, 1]
    throttle: float = 0.0   # [0, 1]
    brake: float = 0.0      # [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "steering", _clip(self.steering, -1.0, 1.0))
        object.__setattr__(self, "throttle", _clip(self.throttle, 0.0, 1.0))
        object.__setattr__(self, "brake", _clip(self.brake, 0.0, 1.0))

    def as_tuple(self):
        return (self.steering, self.throttle, self.brake)


def step(state: VehicleState, action: ActionTriple, params: VehicleParams,
         dt: float) -> VehicleState:
    """One fixed-step explicit-Euler update of the kinematic bicycle.

    Position and heading advance with the current speed; the longitudinal
    update applies throttle force (fading linearly toward max_speed), brake
    and linear drag, then clamps speed to [0, max_speed].
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    v = state.speed
    x = state.x + v * math.cos(state.heading) * dt
    y = state.y + v * math.sin(state.heading) * dt
    steer_angle = action.steering * params.max_steer
    heading = state.heading + (v / params.wheelbase) * math.tan(steer_angle) * dt
    accel = (params.throttle_gain * action.throttle * (1.0 - v / params.max_speed)
             - params.brake_gain * action.brake
             - params.drag_coeff * v)
    speed = _clip(v + accel * dt, 0.0, params.max_speed)
    return VehicleState(x=x, y=y, heading=heading, speed=speed)
