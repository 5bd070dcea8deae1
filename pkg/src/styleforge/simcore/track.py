"""Piecewise straight/arc track geometry with arc-length parameterization.

A track is specified as an ordered list of segments (straights and circular
arcs), compiled into an immutable :class:`TrackGeometry` that answers
arc-length queries: point, heading, signed curvature (left positive) and
section type.  The compiled form also carries a packed float64 array consumed
by the kernel backends for nearest-point queries and rendering.

Track files are line-oriented text::

    # comment
    version 1
    lane_half_width 4.0
    closed true
    segment straight 450
    segment arc 75 90 left      # radius_m sweep_deg turn

Angles are degrees in files, radians everywhere in code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import GeometryError
from ..kernels import nearest_centerline
from ..kernels.layout import (
    K_A0,
    K_CX,
    K_CY,
    K_DX,
    K_DY,
    K_H0,
    K_KAPPA,
    K_KIND,
    K_LEN,
    K_SSTART,
    K_X0,
    K_Y0,
    SEG_COLS,
)

TWO_PI = 2.0 * math.pi

SECTION_STRAIGHT = 0
SECTION_LEFT = 1
SECTION_RIGHT = 2

SECTION_NAMES = {SECTION_STRAIGHT: "straight", SECTION_LEFT: "left", SECTION_RIGHT: "right"}


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class Straight:
    length: float

    def validate(self):
        if not self.length > 0:
            raise GeometryError(f"straight length must be positive, got {self.length}")


@dataclass(frozen=True)
class Arc:
    radius: float
    sweep: float            # radians, in (0, 2*pi]
    turn: str               # "left" | "right"

    def validate(self, lane_half_width: float):
        if self.turn not in ("left", "right"):
            raise GeometryError(f"arc turn must be 'left' or 'right', got {self.turn!r}")
        if not self.radius > lane_half_width:
            raise GeometryError(
                f"arc radius {self.radius} must exceed lane half width {lane_half_width}"
            )
        if not 0.0 < self.sweep <= TWO_PI:
            raise GeometryError(f"arc sweep must be in (0, 2*pi], got {self.sweep}")

    @property
    def length(self) -> float:
        return self.radius * self.sweep


Segment = Union[Straight, Arc]


@dataclass(frozen=True)
class TrackSpec:
    segments: tuple
    lane_half_width: float
    closed: bool = True
    name: str = "track"

    def validate(self):
        if not self.segments:
            raise GeometryError("track needs at least one segment")
        if not self.lane_half_width > 0:
            raise GeometryError("lane_half_width must be positive")
        for seg in self.segments:
            if isinstance(seg, Straight):
                seg.validate()
            elif isinstance(seg, Arc):
                seg.validate(self.lane_half_width)
            else:
                raise GeometryError(f"unknown segment type {type(seg).__name__}")


class TrackGeometry:
    """Compiled, immutable form of a TrackSpec.

    Attributes
    ----------
    total_length : float
        Sum of segment arc lengths.
    lane_half_width, closed, name : copied from the spec.
    packed : (n_segments, 12) float64
        Kernel-facing layout, see kernels.layout.
    """

    def __init__(self, spec: TrackSpec):
        spec.validate()
        self.spec = spec
        self.lane_half_width = spec.lane_half_width
        self.closed = spec.closed
        self.name = spec.name

        packed = np.zeros((len(spec.segments), SEG_COLS))
        x, y, heading = 0.0, 0.0, 0.0
        s = 0.0
        for i, seg in enumerate(spec.segments):
            row = packed[i]
            row[K_SSTART] = s
            row[K_X0] = x
            row[K_Y0] = y
            row[K_H0] = heading
            row[K_DX] = math.cos(heading)
            row[K_DY] = math.sin(heading)
            if isinstance(seg, Straight):
                row[K_KIND] = 0.0
                row[K_LEN] = seg.length
                x += seg.length * row[K_DX]
                y += seg.length * row[K_DY]
            else:
                row[K_KIND] = 1.0
                row[K_LEN] = seg.length
                sign = 1.0 if seg.turn == "left" else -1.0
                row[K_KAPPA] = sign / seg.radius
                # center sits one radius toward the inside of the turn
                cx = x - sign * seg.radius * math.sin(heading)
                cy = y + sign * seg.radius * math.cos(heading)
                row[K_CX] = cx
                row[K_CY] = cy
                row[K_A0] = math.atan2(y - cy, x - cx)
                heading_end = heading + sign * seg.sweep
                psi = sign * seg.sweep
                x = cx + seg.radius * math.sin(heading + psi) * sign
                y = cy - seg.radius * math.cos(heading + psi) * sign
                heading = heading_end
            s += seg.length
        self.total_length = s
        self.packed = packed
        self.packed.setflags(write=False)
        self._s_starts = packed[:, K_SSTART].copy()

        if spec.closed:
            gap = math.hypot(x, y)
            ang_gap = abs(normalize_angle(heading))
            if gap > 1e-6 or ang_gap > 1e-8:
                raise GeometryError(
                    f"closed track does not close: position gap {gap:.3e} m, "
                    f"heading gap {ang_gap:.3e} rad"
                )

    @property
    def num_segments(self) -> int:
        return len(self.spec.segments)

    # -- arc-length queries -------------------------------------------------

    def wrap_s(self, s: float) -> float:
        if self.closed:
            return s % self.total_length
        return min(max(s, 0.0), self.total_length)

    def _segment_index(self, s: float) -> int:
        s = self.wrap_s(s)
        idx = int(np.searchsorted(self._s_starts, s, side="right")) - 1
        return max(idx, 0)

    def point_at(self, s: float):
        """Centerline point (x, y) at arc length s."""
        s = self.wrap_s(s)
        row = self.packed[self._segment_index(s)]
        u = s - row[K_SSTART]
        if row[K_KIND] == 0.0:
            return (row[K_X0] + u * row[K_DX], row[K_Y0] + u * row[K_DY])
        kappa = row[K_KAPPA]
        radius = 1.0 / abs(kappa)
        sign = 1.0 if kappa > 0.0 else -1.0
        psi = sign * u / radius
        h = row[K_H0]
        x = row[K_CX] + radius * math.sin(h + psi) * sign
        y = row[K_CY] - radius * math.cos(h + psi) * sign
        return (x, y)

    def heading_at(self, s: float) -> float:
        s = self.wrap_s(s)
        row = self.packed[self._segment_index(s)]
        u = s - row[K_SSTART]
        if row[K_KIND] == 0.0:
            return row[K_H0]
        return normalize_angle(row[K_H0] + row[K_KAPPA] * u)

    def curvature_at(self, s: float) -> float:
        """Signed curvature at s: 0 on straights, +1/R on left arcs, -1/R on right."""
        row = self.packed[self._segment_index(s)]
        return float(row[K_KAPPA])

    def section_at(self, s: float) -> int:
        k = self.curvature_at(s)
        if k > 0.0:
            return SECTION_LEFT
        if k < 0.0:
            return SECTION_RIGHT
        return SECTION_STRAIGHT

    def nearest(self, x: float, y: float):
        """Nearest centerline point: returns (s, signed_lateral, heading_at_s)."""
        return nearest_centerline(self.packed, x, y)

    def centerline_polyline(self, step: float = 5.0) -> np.ndarray:
        """Sampled centerline for plotting/minimaps, shape (N, 2)."""
        n = max(int(self.total_length / step), 2)
        pts = np.empty((n + 1, 2))
        for i in range(n + 1):
            pts[i] = self.point_at(self.total_length * i / n)
        return pts


def build_track(spec: TrackSpec) -> TrackGeometry:
    """Compile a TrackSpec, raising GeometryError if it is inconsistent."""
    return TrackGeometry(spec)


# -- track file io ----------------------------------------------------------

def parse_track(text: str, name: str = "track") -> TrackSpec:
    lane_half_width = None
    closed = None
    version = None
    segments = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "version":
                version = int(parts[1])
            elif key == "name":
                name = parts[1]
            elif key == "lane_half_width":
                lane_half_width = float(parts[1])
            elif key == "closed":
                closed = parts[1].lower() in ("true", "1", "yes")
            elif key == "segment":
                kind = parts[1]
                if kind == "straight":
                    segments.append(Straight(length=float(parts[2])))
                elif kind == "arc":
                    segments.append(Arc(radius=float(parts[2]),
                                        sweep=math.radians(float(parts[3])),
                                        turn=parts[4]))
                else:
                    raise GeometryError(f"line {lineno}: unknown segment kind {kind!r}")
            else:
                raise GeometryError(f"line {lineno}: unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            raise GeometryError(f"line {lineno}: cannot parse {raw!r}: {exc}") from exc
    if version != 1:
        raise GeometryError(f"unsupported or missing track file version: {version}")
    if lane_half_width is None or closed is None:
        raise GeometryError("track file must set lane_half_width and closed")
    return TrackSpec(segments=tuple(segments), lane_half_width=lane_half_width,
                     closed=closed, name=name)


def load_track(path) -> TrackSpec:
    p = Path(path)
    return parse_track(p.read_text(), name=p.stem)


def format_track(spec: TrackSpec) -> str:
    lines = ["# styleforge track", "version 1",
             f"name {spec.name}",
             f"lane_half_width {spec.lane_half_width!r}",
             f"closed {'true' if spec.closed else 'false'}"]
    for seg in spec.segments:
        if isinstance(seg, Straight):
            lines.append(f"segment straight {seg.length!r}")
        else:
            lines.append(f"segment arc {seg.radius!r} {math.degrees(seg.sweep)!r} {seg.turn}")
    return "\n".join(lines) + "\n"


def save_track(spec: TrackSpec, path):
    Path(path).write_text(format_track(spec))
