"""
Artifact Exporter
Writes run artifacts: JSON documents, trajectory CSV, the run report and an
optional gnuplot script. Output is deterministic (sorted keys, shortest
round-trip floats, no timestamps) so repeated runs are byte-identical.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from scheduling.scheduler import QUOTED_SAVINGS, Schedule, savings
from simulation.simulator import Trajectory

logger = logging.getLogger(__name__)

SAVINGS_NOTE = (
    "savings is 1 - transmissions/horizon; period-3 transmission gives "
    "1 - 1/3 = 0.6667, the quoted 0.6767 is off by one point"
)


def to_builtin(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays into JSON-ready Python values"""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(data: Dict, path: Union[str, Path]) -> Path:
    """
    Save a document as JSON.

    Args:
        data: Document (numpy values allowed)
        path: Destination file

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(to_builtin(data), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    logger.info("wrote %s", path)
    return path


def _labels(prefix: str, size: int) -> List[str]:
    if size == 1:
        return [prefix]
    return [f"{prefix}{i}" for i in range(1, size + 1)]


def trajectory_header(n: int, p: int = 1, m_u: int = 1, m_w: int = 1) -> List[str]:
    """Column names t,x1..xn,y,u,w,transmitted (vector y/u/w get indices)"""
    return (
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + _labels("y", p)
        + _labels("u", m_u)
        + _labels("w", m_w)
        + ["transmitted"]
    )


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> Path:
    """
    One row per recorded state. The last row (t = T) has no input,
    disturbance or transmission, so those cells stay empty.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    n = len(traj.states[0])
    p = len(traj.outputs[0])
    m_u = len(traj.inputs[0]) if traj.inputs else 1
    m_w = len(traj.disturbances[0]) if traj.disturbances else 1

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(trajectory_header(n, p, m_u, m_w))
        for t, (x, y) in enumerate(zip(traj.states, traj.outputs)):
            row = [t] + [repr(float(v)) for v in x] + [repr(float(v)) for v in y]
            if t < traj.horizon:
                row += [repr(float(v)) for v in traj.inputs[t]]
                row += [repr(float(v)) for v in traj.disturbances[t]]
                row.append(int(traj.transmitted[t]))
            else:
                row += [""] * (m_u + m_w + 1)
            writer.writerow(row)

    logger.info("wrote %s (%d rows)", path, len(traj.states))
    return path


def build_report(
    traj: Trajectory,
    schedule: Schedule,
    horizon: int,
    alpha: int,
    extra: Optional[Dict] = None,
) -> Dict:
    """
    Run report: transmission count, savings and glucose excursion.

    Args:
        traj: Simulated trajectory
        schedule: Schedule that drove the run
        horizon: Number of simulated steps
        alpha: Certified safe time interval
        extra: Additional entries merged into the report

    Returns:
        Report dict
    """
    instants = [t for t in schedule.instants if t < horizon]
    summary = traj.summary()
    report = {
        "alpha": alpha,
        "horizon": horizon,
        "transmissions": len(instants),
        "savings": savings(Schedule(tuple(instants), schedule.alpha), horizon),
        "paper_claim": QUOTED_SAVINGS,
        "note": SAVINGS_NOTE,
        "min_glucose_deviation": summary["min_glucose_deviation"],
        "max_glucose_deviation": summary["max_glucose_deviation"],
        "min_input": summary["min_input"],
        "max_input": summary["max_input"],
        "max_gap": max(schedule.gaps(), default=0),
        "safe": True,
    }
    if extra:
        report.update(extra)
    return report


def gnuplot_script(csv_name: str = "trajectory.csv", sample_minutes: float = 5.0) -> str:
    """Plot script for the trajectory CSV: glucose deviation, insulin input, transmissions"""
    return "\n".join([
        "# gnuplot -p plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set multiplot layout 3,1",
        f"minutes = {sample_minutes!r}",
        "set xlabel 'time (min)'",
        "set ylabel 'glucose deviation'",
        f"plot '{csv_name}' using ($1*minutes):(column('y')) with lines",
        "set ylabel 'insulin input'",
        f"plot '{csv_name}' using ($1*minutes):(column('u')) with steps",
        "set ylabel 'transmitted'",
        "set yrange [-0.1:1.1]",
        f"plot '{csv_name}' using ($1*minutes):(column('transmitted')) with impulses",
        "unset multiplot",
        "",
    ])


def write_gnuplot_script(path: Union[str, Path], csv_name: str = "trajectory.csv",
                         sample_minutes: float = 5.0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(gnuplot_script(csv_name, sample_minutes), encoding="utf-8")
    return path
