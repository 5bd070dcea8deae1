"""Road-frame queries: where is the vehicle relative to the centerline."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import OffTrackError
from .track import TrackGeometry, normalize_angle
from .vehicle import VehicleState

OFF_TRACK_FACTOR = 5.0  # rollouts abort beyond this many lane half widths


@dataclass(frozen=True)
class TrackFrame:
    """Vehicle pose expressed in the road frame at the nearest centerline point."""

    s: float                    # arc length of the nearest centerline point
    cross_track_error: float    # signed, left of centerline positive
    heading_error: float        # vehicle heading minus track heading, (-pi, pi]
    geom: TrackGeometry

    def curvature_ahead(self, d: float) -> float:
        """Signed centerline curvature at arc length s + d."""
        return self.geom.curvature_at(self.s + d)

    @property
    def section(self) -> int:
        return self.geom.section_at(self.s)


def track_frame(state: VehicleState, geom: TrackGeometry) -> TrackFrame:
    """Project the vehicle onto the centerline.

    Raises OffTrackError when the vehicle is farther than
    OFF_TRACK_FACTOR * lane_half_width from the centerline.
    """
    s, cte, track_heading = geom.nearest(state.x, state.y)
    limit = OFF_TRACK_FACTOR * geom.lane_half_width
    if abs(cte) > limit:
        raise OffTrackError(cte, limit)
    return TrackFrame(
        s=s,
        cross_track_error=cte,
        heading_error=normalize_angle(state.heading - track_heading),
        geom=geom,
    )
