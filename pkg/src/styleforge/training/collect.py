"""Scripted data collection.

Episodes spawn at randomized track positions with small lateral/heading
jitter, then a style controller drives while an Ornstein-Uhlenbeck noise
process perturbs the *applied* steering. Recorded labels are the clean
controller outputs, so the dataset pairs slightly-off-nominal states with
corrective expert actions — behavioral cloning then recovers from drift.

Two entry points:
- collect_preset: one driver, fixed style parameters, cycling target speeds
  (per-driver data for adapter training).
- collect_mixed: alternates the two style presets and jitters their
  longitudinal parameters per episode (unbiased base-model data). Mixture
  anticipation distances are clipped to the camera draw range so braking
  onsets stay visually groundable.

Episodes that leave the lane are discarded and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..autodiff.rng import STREAM_EPISODE, philox_stream
from ..errors import DataError, OffTrackError
from ..simcore import (ActionTriple, CameraConfig, TrackGeometry, VehicleParams,
                       VehicleState, render_observation, step, track_frame)
from ..styledriver import StyleController, StyleParams, StylePreset, plan_target_speed
from .dataset import NUM_COLS, Dataset, encode_image

DEFAULT_DT = 0.05
DEFAULT_TARGET_SPEEDS = (15.0, 20.0, 25.0)

# mixture anticipation bounds, meters; upper bound tracks camera visibility
MIX_ANTICIPATION = (25.0, 80.0)

OU_THETA = 2.0  # 1/s, noise mean-reversion rate


@dataclass
class CollectReport:
    episodes_requested: int
    episodes_kept: int
    episodes_discarded: int
    discard_reasons: List[str] = field(default_factory=list)
    samples: int = 0


@dataclass(frozen=True)
class EpisodePlan:
    params: StyleParams
    target_speed: float
    label: str


DriverPlanFn = Callable[[int, np.random.Generator], EpisodePlan]


def _spawn(geom: TrackGeometry, plan: EpisodePlan, vehicle: VehicleParams,
           rng: np.random.Generator) -> VehicleState:
    s0 = rng.uniform(0.0, geom.total_length)
    lateral = rng.uniform(-1.5, 1.5)
    heading_jitter = rng.uniform(-0.15, 0.15)
    cx, cy = geom.point_at(s0)
    h = geom.heading_at(s0)
    x = cx - lateral * math.sin(h)
    y = cy + lateral * math.cos(h)
    state = VehicleState(x=x, y=y, heading=h + heading_jitter, speed=0.0)
    frame = track_frame(state, geom)
    planned = plan_target_speed(frame, plan.params)
    v0 = planned * rng.uniform(0.7, 1.0)
    return VehicleState(x=x, y=y, heading=h + heading_jitter,
                        speed=min(v0, vehicle.max_speed))


def _run_episode(geom: TrackGeometry, camera: CameraConfig, vehicle: VehicleParams,
                 plan: EpisodePlan, steps: int, dt: float, t0: float,
                 steering_noise: float, rng: np.random.Generator):
    controller = StyleController(plan.params, vehicle)
    state = _spawn(geom, plan, vehicle, rng)
    images = np.empty((steps, camera.height, camera.width), dtype=np.uint8)
    scalars = np.empty((steps, NUM_COLS), dtype=np.float64)
    sections = np.empty(steps, dtype=np.uint8)
    sigma = steering_noise * math.sqrt(2.0 * OU_THETA)
    noise = 0.0
    for k in range(steps):
        try:
            frame = track_frame(state, geom)
        except OffTrackError:
            return None, "left the road corridor"
        if abs(frame.cross_track_error) > geom.lane_half_width:
            return None, "left the lane"
        obs = render_observation(state, geom, camera)
        clean = controller.control(state, frame, dt)
        images[k] = encode_image(obs)
        scalars[k] = (state.speed, clean.steering, clean.throttle, clean.brake,
                      plan.target_speed, t0 + k * dt)
        sections[k] = frame.section
        noise += OU_THETA * (-noise) * dt + sigma * math.sqrt(dt) * rng.normal()
        applied = ActionTriple(steering=clean.steering + noise,
                               throttle=clean.throttle, brake=clean.brake)
        state = step(state, applied, vehicle, dt)
    return (images, scalars, sections), None


def collect(geom: TrackGeometry, camera: CameraConfig, driver_plan: DriverPlanFn,
            driver_id: str, *, episodes: int, steps_per_episode: int,
            seed: int, dt: float = DEFAULT_DT, steering_noise: float = 0.03,
            vehicle: Optional[VehicleParams] = None
            ) -> Tuple[Dataset, CollectReport]:
    if episodes < 1 or steps_per_episode < 1:
        raise DataError("episodes and steps_per_episode must be >= 1")
    vehicle = vehicle or VehicleParams()
    report = CollectReport(episodes_requested=episodes, episodes_kept=0,
                           episodes_discarded=0)
    parts = []
    episode_starts = []
    labels = []
    t0 = 0.0
    count = 0
    for e in range(episodes):
        rng = philox_stream(seed, STREAM_EPISODE, e)
        plan = driver_plan(e, rng)
        result, reason = _run_episode(geom, camera, vehicle, plan,
                                      steps_per_episode, dt, t0, steering_noise, rng)
        if result is None:
            report.episodes_discarded += 1
            report.discard_reasons.append(f"episode {e} ({plan.label}): {reason}")
            continue
        report.episodes_kept += 1
        episode_starts.append(count)
        labels.append(plan.label)
        parts.append(result)
        count += steps_per_episode
        t0 += steps_per_episode * dt
    if not parts:
        raise DataError("all episodes were discarded; nothing to save")
    dataset = Dataset(
        camera=camera, track=geom.name, driver=driver_id, dt=dt,
        images=np.concatenate([p[0] for p in parts]),
        scalars=np.concatenate([p[1] for p in parts]),
        sections=np.concatenate([p[2] for p in parts]),
        episode_starts=episode_starts,
        meta={"seed": int(seed), "steering_noise": steering_noise,
              "episode_labels": labels,
              "discarded": report.episodes_discarded})
    report.samples = len(dataset)
    return dataset, report


def collect_preset(geom: TrackGeometry, preset: StylePreset, camera: CameraConfig,
                   *, episodes: int, steps_per_episode: int, seed: int,
                   target_speeds: Sequence[float] = DEFAULT_TARGET_SPEEDS,
                   dt: float = DEFAULT_DT, steering_noise: float = 0.03,
                   vehicle: Optional[VehicleParams] = None
                   ) -> Tuple[Dataset, CollectReport]:
    """Per-driver dataset: fixed style, target speed cycling across episodes."""

    def plan(e: int, rng: np.random.Generator) -> EpisodePlan:
        tv = float(target_speeds[e % len(target_speeds)])
        return EpisodePlan(params=preset.params.with_target(tv),
                           target_speed=tv, label=f"{preset.name}@{tv:g}")

    return collect(geom, camera, plan, driver_id=f"style-{preset.name}",
                   episodes=episodes, steps_per_episode=steps_per_episode,
                   seed=seed, dt=dt, steering_noise=steering_noise,
                   vehicle=vehicle)


def collect_mixed(geom: TrackGeometry, presets: Sequence[StylePreset],
                  camera: CameraConfig, *, episodes: int, steps_per_episode: int,
                  seed: int, target_speeds: Sequence[float] = DEFAULT_TARGET_SPEEDS,
                  dt: float = DEFAULT_DT, steering_noise: float = 0.05,
                  vehicle: Optional[VehicleParams] = None
                  ) -> Tuple[Dataset, CollectReport]:
    """Unbiased base-model dataset: alternate the presets, jitter their
    longitudinal parameters per episode, cycle target speeds."""
    if not presets:
        raise DataError("collect_mixed needs at least one preset")

    def plan(e: int, rng: np.random.Generator) -> EpisodePlan:
        preset = presets[e % len(presets)]
        tv = float(target_speeds[(e // len(presets)) % len(target_speeds)])
        base = preset.params
        params = StyleParams(
            target_speed=tv,
            curve_speed_factor=base.curve_speed_factor,
            anticipation_distance=float(rng.uniform(*MIX_ANTICIPATION)),
            throttle_kp=base.throttle_kp * rng.uniform(0.75, 1.25),
            brake_kp=base.brake_kp * rng.uniform(0.75, 1.25),
            max_jerk=base.max_jerk * rng.uniform(0.8, 1.2),
            lookahead=base.lookahead,
        )
        return EpisodePlan(params=params, target_speed=tv,
                           label=f"mixed-{preset.name}@{tv:g}")

    return collect(geom, camera, plan, driver_id="mixed",
                   episodes=episodes, steps_per_episode=steps_per_episode,
                   seed=seed, dt=dt, steering_noise=steering_noise,
                   vehicle=vehicle)
