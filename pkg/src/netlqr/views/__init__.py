# src/netlqr/views/__init__.py
from __future__ import annotations

from .plot import plot_series, plot_trajectory
from .table import CsvTable, gains_table, spectrum_table, summary_table, trajectory_table

__all__ = [
    "CsvTable",
    "gains_table",
    "plot_series",
    "plot_trajectory",
    "spectrum_table",
    "summary_table",
    "trajectory_table",
]
