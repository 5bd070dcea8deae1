"""Synthetic forward-camera observations.

The observation is a grayscale perspective view of the two lane boundaries
(centerline offset by +/- lane_half_width) seen from a camera mounted at the
vehicle pose: boundary lines render at 1.0, ground at 0.1, sky at 0.0.
Rendering is a per-pixel ground-plane ray cast, fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..kernels import render_observation as _render_kernel
from .track import TrackGeometry
from .vehicle import VehicleState

LINE_HALF_WIDTH = 0.2   # half thickness of a painted boundary line, meters

# every rendered pixel is exactly one of these shades (sky, ground, line),
# which lets datasets store observations as exact palette indices
PALETTE = (0.0, 0.1, 1.0)


@dataclass(frozen=True)
class CameraConfig:
    width: int = 64
    height: int = 64
    horizontal_fov: float = 1.3     # radians
    camera_height: float = 1.5      # meters above ground
    max_draw_distance: float = 80.0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("camera resolution must be at least 16x16")
        if not 0.0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal_fov must be in (0, pi)")
        if self.camera_height <= 0 or self.max_draw_distance <= 0:
            raise ValueError("camera_height and max_draw_distance must be positive")

    @property
    def focal(self) -> float:
        return (self.width / 2.0) / math.tan(self.horizontal_fov / 2.0)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "horizontal_fov": self.horizontal_fov,
            "camera_height": self.camera_height,
            "max_draw_distance": self.max_draw_distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraConfig":
        return cls(width=int(d["width"]), height=int(d["height"]),
                   horizontal_fov=float(d["horizontal_fov"]),
                   camera_height=float(d["camera_height"]),
                   max_draw_distance=float(d["max_draw_distance"]))


def render_observation(state: VehicleState, geom: TrackGeometry,
                       cam: CameraConfig) -> np.ndarray:
    """Render the (height, width) float64 observation for a vehicle pose."""
    return _render_kernel(
        geom.packed, state.x, state.y, state.heading,
        cam.width, cam.height, cam.focal, cam.camera_height,
        cam.max_draw_distance, geom.lane_half_width, LINE_HALF_WIDTH,
    )
