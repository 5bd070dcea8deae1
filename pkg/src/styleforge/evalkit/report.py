"""Report emission: per-step CSV per trajectory plus a structured summary.

Formatting is canonical (repr floats, sorted keys) so identical inputs
produce byte-identical files on every platform.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Sequence, Tuple

from ..simcore import SECTION_NAMES
from .metrics import MetricsReport
from .rollout import Trajectory

CSV_HEADER = ("t,x,y,heading,speed,steering,throttle,brake,"
              "s,unwrapped_s,cte,curvature,section")

REPORT_VERSION = 1


def trajectory_csv(traj: Trajectory) -> str:
    lines = [CSV_HEADER]
    for i in range(len(traj)):
        x, y, heading, speed = traj.states[i]
        st, th, br = traj.actions[i]
        lines.append(",".join([
            repr(float(traj.times[i])), repr(float(x)), repr(float(y)),
            repr(float(heading)), repr(float(speed)), repr(float(st)),
            repr(float(th)), repr(float(br)), repr(float(traj.s[i])),
            repr(float(traj.unwrapped_s[i])), repr(float(traj.cte[i])),
            repr(float(traj.curvatures[i])),
            SECTION_NAMES[int(traj.sections[i])],
        ]))
    return "\n".join(lines) + "\n"


def summary_dict(reports: Dict[str, MetricsReport]) -> dict:
    return {
        "version": REPORT_VERSION,
        "models": {name: rep.to_dict() for name, rep in sorted(reports.items())},
    }


def emit_report(out_dir, runs: Sequence[Tuple[str, Trajectory, MetricsReport]]) -> dict:
    """Write <name>.steps.csv per run plus summary.json; returns file map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    reports: Dict[str, MetricsReport] = {}
    for name, traj, rep in runs:
        csv_path = out / f"{name}.steps.csv"
        csv_path.write_text(trajectory_csv(traj))
        files[name] = str(csv_path)
        reports[name] = rep
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(summary_dict(reports), indent=2, sort_keys=True) + "\n")
    files["summary"] = str(summary_path)
    return files
