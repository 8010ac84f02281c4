# src/netlqr/views/table.py
from __future__ import annotations

import csv
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable

import numpy as np
from pydantic import BaseModel, Field

from netlqr.core.decomposition import decompose
from netlqr.exceptions import DimensionMismatchError

if TYPE_CHECKING:
    from netlqr.core.controller import GainSchedule
    from netlqr.core.coupling import SpectralData
    from netlqr.core.simulator import Trajectory

# Significant digits written for floats; fixed so repeated runs produce identical files
FLOAT_DIGITS = 12


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{FLOAT_DIGITS}g}"
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


class CsvTable(BaseModel):
    """Header plus rows, written with ``csv`` in a fixed float format."""

    columns: list[str] = Field(..., min_length=1)
    rows: list[list[Any]] = Field(default_factory=list)

    def add_row(self, values: Iterable[Any]) -> None:
        row = list(values)
        if len(row) != len(self.columns):
            raise DimensionMismatchError(f"Row has {len(row)} cells, table has {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name: str) -> list[Any]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_cell(v) for v in row])
        return path


def trajectory_table(traj: Trajectory, spec: SpectralData, every: int = 1) -> CsvTable:
    """
    One row per (time, node, component) where component is ``raw``, ``auxiliary``
    or ``eigen<l>`` (1-based), with state then control columns.
    """
    d_x, d_u = traj.x.shape[1], traj.u.shape[1]
    table = CsvTable(
        columns=["time", "node", "component"]
        + [f"x{k + 1}" for k in range(d_x)]
        + [f"u{k + 1}" for k in range(d_u)]
    )
    n = traj.x.shape[2]
    for k in range(0, traj.grid.shape[0], every):
        t = float(traj.grid[k])
        dx, du = decompose(traj.x[k], spec), decompose(traj.u[k], spec)
        for i in range(n):
            table.add_row([t, i + 1, "raw", *traj.x[k][:, i], *traj.u[k][:, i]])
            table.add_row([t, i + 1, "auxiliary", *dx.auxiliary[:, i], *du.auxiliary[:, i]])
            for ell in range(spec.rank):
                table.add_row([t, i + 1, f"eigen{ell + 1}", *dx.eigen[ell][:, i], *du.eigen[ell][:, i]])
    return table


def gains_table(gains: GainSchedule, every: int = 1) -> CsvTable:
    """Gain entries per sample time: subsystem ``auxiliary`` or ``group<g>`` (1-based)."""
    d_u, d_x = gains.aux_gain.shape[-2:]
    table = CsvTable(
        columns=["time", "subsystem", "eigenvalue"] + [f"k{a + 1}{b + 1}" for a in range(d_u) for b in range(d_x)]
    )
    values = gains.spectral.group_values
    if gains.is_finite and gains.grid is not None:
        samples = [(float(t), gains.aux_gain[k], gains.group_gains[:, k]) for k, t in enumerate(gains.grid)][::every]
        if (gains.grid.shape[0] - 1) % every:
            samples.append((float(gains.grid[-1]), gains.aux_gain[-1], gains.group_gains[:, -1]))
    else:
        samples = [(float("inf"), gains.aux_gain, gains.group_gains)]
    for t, aux, groups in samples:
        table.add_row([t, "auxiliary", 0.0, *aux.reshape(-1)])
        for g, K in enumerate(groups):
            table.add_row([t, f"group{g + 1}", float(values[g]), *K.reshape(-1)])
    return table


def spectrum_table(spec: SpectralData) -> CsvTable:
    table = CsvTable(columns=["index", "group", "eigenvalue"] + [f"v{i + 1}" for i in range(spec.n)])
    for ell in range(spec.rank):
        table.add_row([ell + 1, int(spec.group_of[ell]) + 1, float(spec.eigenvalues[ell]), *spec.eigenvectors[:, ell]])
    return table


def summary_table(entries: dict[str, float | int | str]) -> CsvTable:
    """Two-column quantity/value listing in insertion order."""
    table = CsvTable(columns=["quantity", "value"])
    for key, value in entries.items():
        table.add_row([key, value])
    return table
