"""Closed-loop rollouts and the metric battery (G-G, style distances)."""

from .gg import convex_hull, curve_gg, gg_points, gg_summary, hull_area
from .metrics import (DEFAULT_SUSTAIN, DEFAULT_TOL, CurveEvent, DistanceResult,
                      MetricsReport, compute_metrics, curve_events,
                      distance_to_target_speed, exit_distances)
from .report import (CSV_HEADER, REPORT_VERSION, emit_report, summary_dict,
                     trajectory_csv)
from .rollout import Trajectory, make_preset_policy, rollout

__all__ = [
    "convex_hull", "curve_gg", "gg_points", "gg_summary", "hull_area",
    "DEFAULT_SUSTAIN", "DEFAULT_TOL", "CurveEvent", "DistanceResult",
    "MetricsReport", "compute_metrics", "curve_events",
    "distance_to_target_speed", "exit_distances",
    "CSV_HEADER", "REPORT_VERSION", "emit_report", "summary_dict",
    "trajectory_csv",
    "Trajectory", "make_preset_policy", "rollout",
]
