"""Raster figures (PNG) of the significance grid and packed maps via matplotlib.

These complement the SVG files; they use the object-oriented API with the
Agg canvas so no global pyplot state or display is involved.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from .svg import Z_CLAMP

# stripped so repeated runs write identical bytes
_PNG_METADATA = {"Software": None}


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)


def grid_figure(grid) -> Figure:
    G, T = grid.geo_depth, grid.tech_depth
    Z = np.full((G, T), np.nan)
    for cell in grid.ordered():
        if not cell.degenerate and cell.z is not None:
            Z[cell.pair.geo_level - 1, cell.pair.tech_level - 1] = np.clip(cell.z, -Z_CLAMP, Z_CLAMP)
    fig = Figure(figsize=(1.2 * T + 2.0, 1.2 * G + 1.2))
    ax = fig.add_subplot()
    cmap = ListedColormap(
        np.vstack([np.linspace([0, 0, 1], [1, 1, 1], 128), np.linspace([1, 1, 1], [1, 0, 0], 128)]))
    cmap.set_bad("#bfbfbf")
    im = ax.imshow(np.ma.masked_invalid(Z), cmap=cmap, vmin=-Z_CLAMP, vmax=Z_CLAMP)
    for cell in grid.ordered():
        g, t = cell.pair.geo_level - 1, cell.pair.tech_level - 1
        txt = "n/a" if cell.degenerate or cell.z is None else f"{cell.z:.1f}"
        ax.text(t, g, txt, ha="center", va="center", fontsize=9)
    ax.set_xticks(range(T), [str(t) for t in range(1, T + 1)])
    ax.set_yticks(range(G), [str(g) for g in range(1, G + 1)])
    ax.set_xlabel("technology level")
    ax.set_ylabel("geographic level")
    fig.colorbar(im, ax=ax, label="z (temperature vs. null)")
    fig.tight_layout()
    return fig


def portrait_figure(packed, iso, title: str = "") -> Figure:
    m, n = packed.shape
    fig = Figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot()
    ii, jj = np.nonzero(packed.bits)
    ax.scatter((jj + 0.5) / n, (ii + 0.5) / m, s=max(1.0, 2000.0 / max(m, n) ** 2 * 4), c="#1f4e9c")
    xs = np.linspace(0, 1, 256)
    ax.plot(xs, iso.y_of_x(xs), color="#d62728")
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return fig


def save_grid_figure(grid, path) -> None:
    _save(grid_figure(grid), path)


def save_portrait_figure(packed, iso, path, title: str = "") -> None:
    _save(portrait_figure(packed, iso, title), path)
