"""CSV/JSON serialization of fields, histories and diagnostics.

Floats are written with 17 significant digits so the decimal text
round-trips to the exact same double.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .grids import ComplexField, Grid


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def field_to_csv(field: ComplexField, path) -> None:
    """Write a field as rows of (coordinate, Re, Im)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coordinate", "Re", "Im"])
        for x, v in zip(field.grid.nodes, field.values):
            writer.writerow([_fmt(x), _fmt(v.real), _fmt(v.imag)])


def field_from_csv(path, grid: Grid | None = None):
    """Read a field CSV; returns (coordinates, values) or a ComplexField.

    When ``grid`` is given the coordinates must match its nodes exactly and
    a ComplexField is returned.
    """
    coords = []
    vals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["coordinate", "Re", "Im"]:
            raise ValueError(f"unexpected field CSV header {header!r} in {path}")
        for row in reader:
            coords.append(float(row[0]))
            vals.append(complex(float(row[1]), float(row[2])))
    coords = np.asarray(coords)
    vals = np.asarray(vals, dtype=complex)
    if grid is None:
        return coords, vals
    if coords.shape != grid.nodes.shape or not np.array_equal(coords, grid.nodes):
        raise ValueError(f"coordinates in {path} do not match the grid")
    return ComplexField(grid, vals)


def history_to_json(history, path) -> None:
    """Solver iteration history: list of {iteration, residual, theta, reg_eps}."""
    Path(path).write_text(json.dumps(history, indent=1, sort_keys=True) + "\n")


def table_to_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Write named columns of equal length as CSV with 17-digit floats."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("columns must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(n):
            writer.writerow([_fmt(a[i]) for a in arrays])


def table_from_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows) if rows else np.zeros((0, len(names)))
    return {name: data[:, j] for j, name in enumerate(names)}


def spacetime_slice_to_csv(path, times, coords, snapshots) -> None:
    """Rows of (t, x, Re u, Im u, abs u) for a sequence of snapshots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "Re", "Im", "abs"])
        for t, snap in zip(times, snapshots):
            for x, v in zip(coords, snap):
                writer.writerow([_fmt(t), _fmt(x), _fmt(v.real), _fmt(v.imag), _fmt(abs(v))])
