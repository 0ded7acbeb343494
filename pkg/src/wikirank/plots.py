"""Figure rendering for the CLI report paths.

Figures are a presentation layer over the TSV products, which stay the
canonical output. The Agg backend is forced so rendering works headless
and the PNG bytes stay stable across runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .analysis import DensityGrid, OverlapCurve

_OVERLAY_MARKERS = ("o", "s", "^", "D", "v")


def plot_overlap_curves(
    path: str | Path,
    curves: Mapping[str, OverlapCurve],
    title: str = "",
) -> None:
    """Shared-member curves on log-x main axes, exact-position curves in
    an inset. One line per labeled pair."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    inset = ax.inset_axes([0.12, 0.12, 0.38, 0.34])
    for label, curve in sorted(curves.items()):
        ax.plot(curve.j, curve.shared, label=label, linewidth=1.3)
        inset.plot(curve.j, curve.exact, linewidth=1.0)
    ax.set_xscale("log")
    inset.set_xscale("log")
    ax.set_xlabel("j")
    ax.set_ylabel("shared fraction")
    inset.set_ylabel("exact fraction", fontsize=8)
    inset.tick_params(labelsize=7)
    ax.set_ylim(0.0, 1.05)
    inset.set_ylim(0.0, 1.05)
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)


def plot_density_grid(
    path: str | Path,
    grid: DensityGrid,
    title: str = "",
) -> None:
    """Log-color heatmap over the log-rank plane with overlay markers.

    Overlay markers shrink with list position so the head of each marked
    set stands out.
    """
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    counts = grid.counts.astype(np.float64)
    masked = np.ma.masked_equal(counts, 0.0)
    extent = (
        grid.boundaries[0],
        grid.boundaries[-1],
        grid.boundaries[0],
        grid.boundaries[-1],
    )
    image = ax.imshow(
        masked.T,
        origin="lower",
        extent=extent,
        norm=LogNorm(vmin=1.0, vmax=max(counts.max(), 1.0)),
        cmap="viridis",
        interpolation="nearest",
        aspect="equal",
    )
    fig.colorbar(image, ax=ax, label="nodes per cell")
    cell_width = grid.boundaries[1] - grid.boundaries[0]
    for idx, (name, cells) in enumerate(sorted(grid.overlays.items())):
        if cells.shape[0] == 0:
            continue
        # cell centers in log units
        xs = (cells[:, 0] + 0.5) * cell_width
        ys = (cells[:, 1] + 0.5) * cell_width
        sizes = np.linspace(60.0, 12.0, cells.shape[0])
        ax.scatter(
            xs,
            ys,
            s=sizes,
            marker=_OVERLAY_MARKERS[idx % len(_OVERLAY_MARKERS)],
            facecolors="none",
            edgecolors="red" if idx == 0 else "white",
            linewidths=0.9,
            label=name,
        )
    if grid.overlays:
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("log10 K")
    ax.set_ylabel("log10 K*")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
