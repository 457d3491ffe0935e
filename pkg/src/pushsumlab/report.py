"""File outputs: trace CSV, metrics CSV, summary JSON.

All writers are deterministic: floats are rendered with repr (shortest
round-trip form), JSON keys are sorted, and nothing date- or
host-dependent is emitted. Rerunning an identical scenario must
reproduce identical bytes.

Every CSV starts with the comment line ``# schema=1`` followed by a
header row; readers skip comment lines.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .analysis import RunMetrics
from .pushsum import Trace

__all__ = [
    "SCHEMA_LINE",
    "format_float",
    "trace_csv_text",
    "write_trace_csv",
    "write_s_matrices_csv",
    "metrics_csv_text",
    "write_metrics_csv",
    "write_summary_json",
    "read_csv_columns",
    "sha256_text",
]

SCHEMA_LINE = "# schema=1"


def format_float(v: float) -> str:
    return repr(float(v))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def trace_csv_text(trace: Trace) -> str:
    """Rows (t, agent, y, z_0..z_{d-1}) for every recorded state."""
    d = trace.d
    header = "t,agent,y," + ",".join(f"z_{k}" for k in range(d))
    lines = [SCHEMA_LINE, header]
    times = trace.times()
    zs = trace.zs
    for k in range(trace.steps + 1):
        t = int(times[k])
        for i in range(trace.n):
            cells = [str(t), str(i), format_float(trace.ys[k, i])]
            cells.extend(format_float(v) for v in zs[k, i])
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_trace_csv(path: str, trace: Trace) -> str:
    """Write the trace and return the sha256 of the written text."""
    text = trace_csv_text(trace)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
    return sha256_text(text)


def write_s_matrices_csv(path: str, trace: Trace) -> None:
    """Sidecar with the induced row-stochastic matrix of every step:
    rows (t, row, s_0..s_{n-1}), t being the step's start time."""
    n = trace.n
    header = "t,row," + ",".join(f"s_{j}" for j in range(n))
    lines = [SCHEMA_LINE, header]
    times = trace.times()
    for k in range(trace.steps):
        s = trace.s_mat(k)
        t = int(times[k])
        for i in range(n):
            cells = [str(t), str(i)]
            cells.extend(format_float(v) for v in s[i])
            lines.append(",".join(cells))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def metrics_csv_text(metrics: RunMetrics) -> str:
    """Per-time metric table; cells that do not apply stay empty (the
    final state has no step attached, pure mixing runs have no f-gaps)."""
    header = "t,consensus_error,lyapunov,f_gap_avg,f_gap_agent_k,bound_fixed,bound_varying"
    lines = [SCHEMA_LINE, header]
    steps = len(metrics.consensus) - 1

    def cell(series: Any, k: int) -> str:
        if series is None:
            return ""
        if k >= len(series):
            return ""
        return format_float(series[k])

    for k in range(steps + 1):
        cells = [
            str(int(metrics.times[k])),
            format_float(metrics.consensus[k]),
            cell(metrics.lyapunov, k),
            cell(metrics.f_gap_avg, k),
            cell(metrics.f_gap_agent, k),
            "" if metrics.bound_fixed is None else format_float(metrics.bound_fixed),
            cell(metrics.bound_varying, k),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str, metrics: RunMetrics) -> str:
    text = metrics_csv_text(metrics)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
    return sha256_text(text)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_summary_json(path: str, summary: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_columns(path: str) -> dict[str, np.ndarray]:
    """Read a schema-1 CSV into float columns; empty cells become NaN."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: no rows")
    names = rows[0].split(",")
    data: list[list[float]] = [[] for _ in names]
    for ln in rows[1:]:
        cells = ln.split(",")
        if len(cells) != len(names):
            raise ValueError(f"{path}: row width {len(cells)} != header width {len(names)}")
        for j, cell in enumerate(cells):
            data[j].append(float(cell) if cell != "" else float("nan"))
    return {name: np.asarray(col) for name, col in zip(names, data)}
