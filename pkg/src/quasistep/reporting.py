"""CSV and summary writers for trajectories, step reports and studies."""

import csv
import json
import math
from pathlib import Path


def _num(x):
    return repr(float(x))


def write_trajectory(path, traj):
    path = Path(path)
    dof = traj.states.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{i}" for i in range(dof)])
        for t, u in zip(traj.times, traj.states):
            w.writerow([_num(t)] + [_num(v) for v in u])


def write_step_reports(path, reports):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "iters", "residual", "norm_x", "norm_y"])
        for r in reports:
            w.writerow([r.step_index + 1, r.fp_iterations, _num(r.fp_final_residual),
                        _num(r.norm_x), _num(r.norm_y)])


def read_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_study(path, report):
    """Study CSV plus a ``<stem>_summary.json`` next to it."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_or_eps", "error_x", "error_y", "fitted_order", "pass"])
        for p, ex, ey in zip(report.params, report.error_x, report.error_y):
            w.writerow([_num(p), _num(ex), _num(ey), _num(report.fitted_order), int(report.passed)])
    summary = path.with_name(path.stem + "_summary.json")
    summary.write_text(json.dumps(_jsonable(report.summary()), indent=2, sort_keys=True) + "\n")
    return summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj
