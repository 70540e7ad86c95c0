"""Plain-text emission of trajectories, sweep tables and field grids (atomic writes)."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .se2 import Trajectory
from .snake.fields import FieldGrid


def _fmt(v: float) -> str:
    return repr(float(v))  # shortest repr is value-preserving (<= 17 significant digits)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return _fmt(v)


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over the target."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def table_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_trajectory_csv(traj: Trajectory, path, columns: Sequence[str] | None = None) -> Path:
    """CSV with `t` first; `columns` selects (and orders) a subset of the trajectory's columns."""
    cols = tuple(columns) if columns is not None else traj.columns
    if traj.states.size and not set(cols) <= set(traj.columns):
        raise ValueError(f"unknown columns {sorted(set(cols) - set(traj.columns))}")
    if len(traj):
        idx = [traj.columns.index(c) for c in cols]
        data = np.column_stack([traj.times, traj.states[:, idx]])
    else:
        data = np.empty((0, len(cols) + 1))
    return atomic_write_text(path, table_text(("t",) + cols, data))


def read_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = tuple(rows[0])
    body = [[_parse(v) for v in r] for r in rows[1:]]
    return header, np.array(body, dtype=float).reshape(len(body), len(header))


def _parse(v: str) -> float:
    if v in ("true", "false"):
        return 1.0 if v == "true" else 0.0
    return float(v)


def read_trajectory_csv(path) -> Trajectory:
    header, data = read_csv(path)
    if header[0] != "t":
        raise ValueError(f"{path}: first column must be t")
    times = data[:, 0]
    dt = float(times[1] - times[0]) if len(times) > 1 else 1.0
    return Trajectory(times, data[:, 1:], dt, header[1:])


def emit_field_grid(grid: FieldGrid, path) -> Path:
    a1_min, a1_max, a2_min, a2_max = grid.bounds
    n1, n2 = grid.resolution
    lines = [f"# bounds {_fmt(a1_min)} {_fmt(a1_max)} {_fmt(a2_min)} {_fmt(a2_max)}", f"# resolution {n1} {n2}"]
    for i in range(n1):
        lines.append(" ".join("nan" if grid.mask[i, j] else _fmt(grid.values[i, j]) for j in range(n2)))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_field_grid(path) -> FieldGrid:
    bounds = resolution = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[0] == "bounds":
                    bounds = tuple(float(v) for v in parts[1:5])
                elif parts[0] == "resolution":
                    resolution = (int(parts[1]), int(parts[2]))
                continue
            rows.append([float(v) for v in line.split()])
    if bounds is None or resolution is None:
        raise ValueError(f"{path}: missing bounds or resolution header")
    values = np.array(rows, dtype=float).reshape(resolution)
    return FieldGrid(bounds, resolution, values, np.isnan(values))
