"""Acceleration (G-G) analysis of trajectories.

a_long comes from central differences of recorded speed (one-sided at the
ends); a_lat is v² times the signed centerline curvature at the vehicle's
arc position — far less noisy than double-differentiating position at
simulation timesteps, and identical on steady arcs.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from ..simcore import SECTION_NAMES, SECTION_STRAIGHT
from .rollout import Trajectory


def gg_points(traj: Trajectory) -> np.ndarray:
    """(N, 2) array of (a_long, a_lat) plus section tags via traj.sections."""
    n = len(traj)
    if n < 3:
        raise ValueError("G-G analysis needs at least 3 trajectory steps")
    v = traj.speeds
    dt = traj.dt
    a_long = np.empty(n)
    a_long[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    a_long[0] = (v[1] - v[0]) / dt
    a_long[-1] = (v[-1] - v[-2]) / dt
    a_lat = v * v * traj.curvatures
    return np.column_stack([a_long, a_lat])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; returns hull vertices in CCW order."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    # lexicographic sort is given by np.unique
    def half(iterable):
        chain: List[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def hull_area(points: np.ndarray) -> float:
    """Area of the convex hull of a 2-D point set (0 for degenerate sets)."""
    hull = convex_hull(np.asarray(points, dtype=np.float64))
    if len(hull) < 3:
        return 0.0
    x, y = hull[:, 0], hull[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def gg_summary(traj: Trajectory) -> Dict[str, dict]:
    """Per-section extents and hull area of the G-G cloud."""
    pts = gg_points(traj)
    out: Dict[str, dict] = {}
    for sec, name in SECTION_NAMES.items():
        mask = traj.sections == sec
        if not mask.any():
            continue
        p = pts[mask]
        out[name] = {
            "count": int(mask.sum()),
            "a_long_min": float(p[:, 0].min()),
            "a_long_max": float(p[:, 0].max()),
            "a_lat_min": float(p[:, 1].min()),
            "a_lat_max": float(p[:, 1].max()),
            "hull_area": hull_area(p),
        }
    return out


def curve_gg(traj: Trajectory) -> Tuple[np.ndarray, float]:
    """G-G points on curved sections only, and their hull area."""
    pts = gg_points(traj)
    mask = traj.sections != SECTION_STRAIGHT
    curve_pts = pts[mask]
    return curve_pts, hull_area(curve_pts) if len(curve_pts) else 0.0
