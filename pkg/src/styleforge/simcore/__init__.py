"""2D driving world: track geometry, vehicle dynamics, camera rendering."""

from .camera import LINE_HALF_WIDTH, PALETTE, CameraConfig, render_observation
from .frame import OFF_TRACK_FACTOR, TrackFrame, track_frame
from .track import (
    SECTION_LEFT,
    SECTION_NAMES,
    SECTION_RIGHT,
    SECTION_STRAIGHT,
    Arc,
    Straight,
    TrackGeometry,
    TrackSpec,
    build_track,
    format_track,
    load_track,
    normalize_angle,
    parse_track,
    save_track,
)
from .vehicle import ActionTriple, VehicleParams, VehicleState, step

__all__ = [
    "ActionTriple", "Arc", "CameraConfig", "LINE_HALF_WIDTH", "OFF_TRACK_FACTOR",
    "PALETTE",
    "SECTION_LEFT", "SECTION_NAMES", "SECTION_RIGHT", "SECTION_STRAIGHT",
    "Straight", "TrackFrame", "TrackGeometry", "TrackSpec",
    "VehicleParams", "VehicleState",
    "build_track", "format_track", "load_track", "normalize_angle",
    "parse_track", "render_observation", "save_track", "step", "track_frame",
]
