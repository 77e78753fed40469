"""Result persistence: CSV/JSON writers, SVG line charts, run manifests.

All writes are atomic (write-temp-then-rename) and byte-deterministic:
floats are serialized as shortest round-trip decimals, JSON keys are
sorted, and manifests carry no wall-clock timestamps by default so a rerun
with identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .integrate import Trajectory
from .model import STATE_NAMES

TRAJECTORY_COLUMNS = ("time",) + STATE_NAMES + ("N_h", "I_v", "I_v_w")


def format_number(value) -> str:
    """Shortest round-trip decimal representation."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == int(value) and abs(value) < 2**53:
        return str(int(value))
    return repr(value)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def write_csv(path, header, rows) -> None:
    """Write rows of numbers/strings as CSV with deterministic formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell)
                         for cell in row])
    atomic_write_text(path, buf.getvalue())


def _json_sanitize(obj):
    if isinstance(obj, dict):
        return {k: _json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, payload: dict) -> None:
    text = json.dumps(_json_sanitize(payload), sort_keys=True, indent=2)
    atomic_write_text(path, text + "\n")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Daily trajectory: time, the 18 compartments, and the aggregate totals."""
    rows = []
    for i in range(traj.states.shape[0]):
        y = traj.states[i]
        n_h = y[0] + y[1] + y[2] + y[3]
        i_v = y[12] + y[13]
        i_v_w = y[11] + y[15] + y[14]
        rows.append([traj.times[i], *y.tolist(), n_h, i_v, i_v_w])
    write_csv(path, TRAJECTORY_COLUMNS, rows)


def read_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory CSV back into arrays (full stored precision)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRAJECTORY_COLUMNS:
            raise ValueError(f"unexpected trajectory header {header}")
        times, states = [], []
        for row in reader:
            times.append(float(row[0]))
            states.append([float(v) for v in row[1:1 + len(STATE_NAMES)]])
    return Trajectory(times=np.array(times), states=np.array(states),
                      stats={"steps_accepted": 0, "steps_rejected": 0,
                             "rhs_evaluations": 0,
                             "max_rel_aquatic_excess": -np.inf},
                      method="from-csv")


def write_cost_csv(path, breakdown, release_rates) -> None:
    """Per-day cost series: day, release rate, release cost, societal cost."""
    rows = []
    for day in range(len(breakdown.daily_release_cost)):
        rows.append([day, release_rates[day],
                     breakdown.daily_release_cost[day],
                     breakdown.daily_societal_cost[day]])
    write_csv(path, ("day", "release_rate", "release_cost", "societal_cost"), rows)


def svg_line_chart(series, title: str, x_label: str, y_label: str,
                   width: int = 720, height: int = 420) -> str:
    """Minimal deterministic SVG line chart.

    ``series`` is a list of (label, x array, y array) triples.  Data-faithful
    polylines with linear axes and a few ticks; no styling contract.
    """
    margin = 60
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    xs = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    x_min, x_max = float(xs.min()), float(xs.max())
    y_min, y_max = float(min(ys.min(), 0.0)), float(ys.max())
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0

    def sx(x):
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    axis = (f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
            f'y2="{height - margin}" stroke="black"/>'
            f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
            f'y2="{height - margin}" stroke="black"/>')
    parts.append(axis)
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_min + frac * (x_max - x_min)
        yv = y_min + frac * (y_max - y_min)
        parts.append(
            f'<text x="{sx(xv):.1f}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{xv:.6g}</text>')
        parts.append(
            f'<text x="{margin - 8}" y="{sy(yv):.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{yv:.6g}</text>')
    parts.append(
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>')
    parts.append(
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {height / 2:.1f})">{y_label}</text>')
    for idx, (label, x, y) in enumerate(series):
        color = colors[idx % len(colors)]
        points = " ".join(f"{sx(float(xi)):.3f},{sy(float(yi)):.3f}"
                          for xi, yi in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{points}"/>')
        parts.append(
            f'<text x="{width - margin}" y="{margin + 16 * idx}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, svg_text: str) -> None:
    atomic_write_text(path, svg_text)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def scenario_hash(scenario_doc: dict) -> str:
    canonical = json.dumps(_json_sanitize(scenario_doc), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_run_record(out_dir, scenario_doc: dict, command: str,
                     output_paths) -> Path:
    """Manifest of one run: scenario hash, command, output digests.

    Timestamps are recorded as null so reruns stay byte-identical.
    """
    out_dir = Path(out_dir)
    record = {
        "scenario_hash": scenario_hash(scenario_doc),
        "command": command,
        "timestamps": {"started": None, "finished": None},
        "outputs": [
            {"path": str(Path(p).relative_to(out_dir)), "sha256": file_sha256(p)}
            for p in sorted(output_paths, key=str)
        ],
    }
    path = out_dir / "run.json"
    write_json(path, record)
    return path
