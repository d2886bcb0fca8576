"""Delimited and JSON artifact writers; column layouts are the frozen interface.

All files are written atomically (temp file + rename) and floats use repr
(shortest round-trip), so identical inputs produce bitwise-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .gridfn import GridDomain, GridFunction
from .levykernel import DiscreteKernel


def _fmt(x) -> str:
    return repr(float(x))


def atomic_write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(obj, path: Path):
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


def write_gridfunction_csv(f: GridFunction, path: Path):
    """Header "x0[,x1],value", one row per node in C order."""
    pts = f.domain.points()
    vals = f.values.ravel()
    cols = [f"x{k}" for k in range(f.domain.dim)] + ["value"]
    lines = [",".join(cols)]
    for p, v in zip(pts, vals):
        lines.append(",".join([_fmt(c) for c in p] + [_fmt(v)]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_gridfunction_csv(path: Path) -> GridFunction:
    """Rebuild a GridFunction from its CSV dump (uniform grid required)."""
    rows = Path(path).read_text().strip().splitlines()
    header = rows[0].split(",")
    dim = len(header) - 1
    if dim not in (1, 2) or header[-1] != "value":
        raise ValueError(f"unrecognized grid CSV header: {rows[0]!r}")
    data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
    pts, vals = data[:, :dim], data[:, dim]
    axes = [np.unique(pts[:, k]) for k in range(dim)]
    counts = tuple(a.size for a in axes)
    spacings = [float(np.mean(np.diff(a))) for a in axes]
    for a, s in zip(axes, spacings):
        if np.max(np.abs(np.diff(a) - s)) > 1e-9 * max(s, 1.0):
            raise ValueError("grid CSV nodes are not uniformly spaced")
    domain = GridDomain(tuple(float(a[0]) for a in axes),
                        tuple(float(a[-1]) for a in axes),
                        spacings[0], counts)
    return GridFunction(domain, vals.reshape(counts), domain.half_width)


def write_convergence_csv(rows: list[dict], path: Path):
    """Columns: n, sup_j, inf_i, measured_gap, gap_bound ("" when not run)."""
    cols = ["n", "sup_j", "inf_i", "measured_gap", "gap_bound"]
    lines = [",".join(cols)]
    for row in rows:
        cells = [str(row["n"])]
        for key in cols[1:]:
            value = row.get(key)
            cells.append("" if value is None else _fmt(value))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_steps_csv(step_rows: list[tuple], path: Path):
    """Columns: order, step, sup, inf, lip, trusted_radius, gap_bound."""
    lines = ["order,step,sup,inf,lip,trusted_radius,gap_bound"]
    for order, row in step_rows:
        lines.append(",".join([order, str(row.step), _fmt(row.sup), _fmt(row.inf),
                               _fmt(row.lip), _fmt(row.trusted_radius), _fmt(row.gap_bound)]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_policy_csv(field: np.ndarray, domain: GridDomain, path: Path):
    """Header "x0[,x1],a0[,a1]": one physical offset vector per node."""
    pts = domain.points()
    offsets = field.reshape(-1, domain.dim)
    cols = [f"x{k}" for k in range(domain.dim)] + [f"a{k}" for k in range(domain.dim)]
    lines = [",".join(cols)]
    for p, a in zip(pts, offsets):
        lines.append(",".join([_fmt(c) for c in p] + [_fmt(c) for c in a]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_kernel_csv(kernel: DiscreteKernel, path: Path):
    """Header "offset0[,offset1],weight": physical offsets."""
    cols = [f"offset{k}" for k in range(kernel.dim)] + ["weight"]
    lines = [",".join(cols)]
    for off, w in zip(kernel.physical_offsets, kernel.weights):
        lines.append(",".join([_fmt(c) for c in off] + [_fmt(w)]))
    atomic_write_text(path, "\n".join(lines) + "\n")
