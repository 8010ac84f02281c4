# src/netlqr/views/plot.py
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

if TYPE_CHECKING:
    from netlqr.core.coupling import SpectralData
    from netlqr.core.simulator import Trajectory

logger = logging.getLogger(__name__)


def plot_trajectory(traj: Trajectory, spec: SpectralData, path: str | Path, title: str = "") -> Path:
    """
    Line charts of the auxiliary and eigen parts of the first state and control
    channel for every node. One row of panels per component, states left and controls right.
    """
    path = Path(path)
    V = spec.eigenvectors
    coeff_x = traj.x[:, 0, :] @ V  # (N+1, L)
    coeff_u = traj.u[:, 0, :] @ V
    eig_x = np.einsum("kl,nl->lkn", coeff_x, V)
    eig_u = np.einsum("kl,nl->lkn", coeff_u, V)
    aux_x = traj.x[:, 0, :] - eig_x.sum(axis=0)
    aux_u = traj.u[:, 0, :] - eig_u.sum(axis=0)
    panels = [("auxiliary", aux_x, aux_u)] + [(f"eigen {ell + 1}", eig_x[ell], eig_u[ell]) for ell in range(spec.rank)]

    with plt.rc_context({"svg.hashsalt": "netlqr", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(len(panels), 2, figsize=(10, 2.4 * len(panels)), squeeze=False, sharex=True)
        for row, (label, xs, us) in zip(axes, panels):
            row[0].plot(traj.grid, xs, linewidth=0.8)
            row[0].set_ylabel(f"{label}\nstate")
            row[1].plot(traj.grid, us, linewidth=0.8)
            row[1].set_ylabel("control")
        axes[-1][0].set_xlabel("t")
        axes[-1][1].set_xlabel("t")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.debug("Wrote %s", path)
    return path


def plot_series(grid: np.ndarray, values: np.ndarray, path: str | Path, ylabel: str, log: bool = False) -> Path:
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "netlqr", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(grid, values, linewidth=1.0)
        if log:
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
