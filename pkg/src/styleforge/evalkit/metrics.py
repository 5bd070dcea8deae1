"""Style metrics: curve entry/exit events, distance to target speed, report.

Curve entry = the last straight sample before curvature becomes nonzero;
curve exit = the first straight sample after it returns to zero. The
distance-to-target metric scans forward from an event for the first sample
where |speed − target| stays within tolerance for a sustained window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..simcore import SECTION_STRAIGHT
from .gg import gg_summary
from .rollout import Trajectory

DEFAULT_TOL = 0.25       # m/s
DEFAULT_SUSTAIN = 1.0    # seconds


@dataclass(frozen=True)
class CurveEvent:
    entry_index: int     # last straight sample before the curve
    exit_index: int      # first straight sample after it (-1 if truncated)
    entry_speed: float
    min_speed: float     # minimum speed inside the curve


@dataclass(frozen=True)
class DistanceResult:
    event_index: int
    reached: bool
    distance: float      # meters of arc from the event (valid when reached)
    max_speed: float     # highest speed seen while scanning


def curve_events(traj: Trajectory) -> List[CurveEvent]:
    sec = traj.sections
    v = traj.speeds
    events: List[CurveEvent] = []
    n = len(traj)
    i = 0
    while i < n - 1:
        if sec[i] == SECTION_STRAIGHT and sec[i + 1] != SECTION_STRAIGHT:
            entry = i
            j = i + 1
            while j < n and sec[j] != SECTION_STRAIGHT:
                j += 1
            exit_idx = j if j < n else -1
            inside = v[entry + 1: j]
            events.append(CurveEvent(
                entry_index=entry, exit_index=exit_idx,
                entry_speed=float(v[entry]),
                min_speed=float(inside.min()) if len(inside) else float(v[entry])))
            i = j
        else:
            i += 1
    return events


def distance_to_target_speed(traj: Trajectory, event_index: int, target: float,
                             tol: float = DEFAULT_TOL,
                             sustain: float = DEFAULT_SUSTAIN) -> DistanceResult:
    """Arc length from the event to the first point where |v − target| <= tol
    holds for `sustain` seconds; unreached events report the max speed seen."""
    if not 0 <= event_index < len(traj):
        raise ValueError(f"event index {event_index} outside trajectory")
    v = traj.speeds
    us = traj.unwrapped_s
    window = max(int(round(sustain / traj.dt)), 1)
    within = np.abs(v - target) <= tol
    max_speed = float(v[event_index:].max())
    for i in range(event_index, len(traj) - window + 1):
        if within[i: i + window].all():
            return DistanceResult(event_index=event_index, reached=True,
                                  distance=float(us[i] - us[event_index]),
                                  max_speed=max_speed)
    return DistanceResult(event_index=event_index, reached=False,
                          distance=float("inf"), max_speed=max_speed)


def exit_distances(traj: Trajectory, target: float, tol: float = DEFAULT_TOL,
                   sustain: float = DEFAULT_SUSTAIN,
                   min_straight: float = 0.0) -> List[DistanceResult]:
    """distance_to_target_speed for every curve exit; optionally only exits
    followed by at least `min_straight` meters of straight road."""
    results = []
    us = traj.unwrapped_s
    sec = traj.sections
    n = len(traj)
    for ev in curve_events(traj):
        if ev.exit_index < 0:
            continue
        if min_straight > 0.0:
            j = ev.exit_index
            while j < n - 1 and sec[j] == SECTION_STRAIGHT:
                j += 1
            straight_len = us[j] - us[ev.exit_index]
            if straight_len < min_straight:
                continue
        results.append(distance_to_target_speed(traj, ev.exit_index, target,
                                                tol, sustain))
    return results


@dataclass
class MetricsReport:
    policy_name: str
    track: str
    target_speed: float
    tol: float
    completed: bool
    failed: bool
    laps: float
    max_abs_cte: float
    mean_speed: float
    gg: Dict[str, dict] = field(default_factory=dict)
    curve_entry_speeds: List[float] = field(default_factory=list)
    curve_min_speeds: List[float] = field(default_factory=list)
    exit_distances_reached: List[float] = field(default_factory=list)
    exit_distances_unreached: int = 0
    mean_exit_distance: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "policy": self.policy_name,
            "track": self.track,
            "target_speed": self.target_speed,
            "tol": self.tol,
            "completed": self.completed,
            "failed": self.failed,
            "laps": self.laps,
            "max_abs_cte": self.max_abs_cte,
            "mean_speed": self.mean_speed,
            "gg": self.gg,
            "curve_entry_speeds": self.curve_entry_speeds,
            "curve_min_speeds": self.curve_min_speeds,
            "exit_distances_reached": self.exit_distances_reached,
            "exit_distances_unreached": self.exit_distances_unreached,
            "mean_exit_distance": self.mean_exit_distance,
        }


def compute_metrics(traj: Trajectory, tol: float = DEFAULT_TOL,
                    sustain: float = DEFAULT_SUSTAIN,
                    min_straight: float = 0.0) -> MetricsReport:
    events = curve_events(traj)
    dists = exit_distances(traj, traj.target_speed, tol, sustain, min_straight)
    reached = [d.distance for d in dists if d.reached]
    return MetricsReport(
        policy_name=traj.policy_name,
        track=traj.track,
        target_speed=traj.target_speed,
        tol=tol,
        completed=traj.completed,
        failed=traj.failed,
        laps=traj.laps / _track_length(traj),
        max_abs_cte=float(np.abs(traj.cte).max()) if len(traj) else 0.0,
        mean_speed=float(traj.speeds.mean()) if len(traj) else 0.0,
        gg=gg_summary(traj) if len(traj) >= 3 else {},
        curve_entry_speeds=[e.entry_speed for e in events],
        curve_min_speeds=[e.min_speed for e in events],
        exit_distances_reached=reached,
        exit_distances_unreached=sum(1 for d in dists if not d.reached),
        mean_exit_distance=float(np.mean(reached)) if reached else None,
    )


def _track_length(traj: Trajectory) -> float:
    length = traj.meta.get("track_length")
    if length:
        return float(length)
    return float(traj.unwrapped_s[-1]) if len(traj) and traj.unwrapped_s[-1] > 0 else 1.0
