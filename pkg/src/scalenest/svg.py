"""Plain-text SVG renderings: the significance grid and packed-matrix portraits.

Output is a pure function of the input (fixed number formatting, no
timestamps), so files diff cleanly between runs.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .model import BinaryMap
from .temperature import Isocline

Z_CLAMP = 5.0
NESTED_RGB = (0, 0, 255)
ANTINESTED_RGB = (255, 0, 0)
DEGENERATE_FILL = "#bfbfbf"
CELL = 60
MARGIN = 70


def darkness(z: float) -> float:
    return min(abs(z), Z_CLAMP) / Z_CLAMP


def cell_color(z: float | None) -> str:
    """White blended towards blue (z < 0) or red (z > 0) by ``min(|z|, 5) / 5``."""
    if z is None:
        return DEGENERATE_FILL
    a = darkness(z)
    target = NESTED_RGB if z < 0 else ANTINESTED_RGB
    rgb = [round(255 + (c - 255) * a) for c in target]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _header(w, h):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>']


def render_heatmap(grid) -> str:
    """One rectangle per scale pair: rows are geo levels (coarse on top),
    columns tech levels (coarse on the left)."""
    G, T = grid.geo_depth, grid.tech_depth
    w, h = MARGIN + T * CELL + 10, MARGIN + G * CELL + 10
    out = _header(w, h)
    out.append(f'<text x="{MARGIN + T * CELL / 2:g}" y="20" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14">technology level</text>')
    out.append(f'<text x="15" y="{MARGIN + G * CELL / 2:g}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="14" transform="rotate(-90 15 '
               f'{MARGIN + G * CELL / 2:g})">geographic level</text>')
    for t in range(1, T + 1):
        out.append(f'<text x="{MARGIN + (t - 0.5) * CELL:g}" y="{MARGIN - 8}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="12">{t}</text>')
    for g in range(1, G + 1):
        out.append(f'<text x="{MARGIN - 8}" y="{MARGIN + (g - 0.5) * CELL + 4:g}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="12">{g}</text>')
    for cell in grid.ordered():
        g, t = cell.pair.geo_level, cell.pair.tech_level
        z = None if cell.degenerate else cell.z
        label = "degenerate" if z is None else f"{z:.2f}"
        dark = "" if z is None else f' data-darkness="{darkness(z):.3f}"'
        out.append(
            f'<rect class="cell" x="{MARGIN + (t - 1) * CELL}" y="{MARGIN + (g - 1) * CELL}" '
            f'width="{CELL}" height="{CELL}" fill="{cell_color(z)}" stroke="#444444" '
            f'data-geo="{g}" data-tech="{t}" data-z="{escape(label)}"{dark}/>')
        out.append(f'<text x="{MARGIN + (t - 0.5) * CELL:g}" y="{MARGIN + (g - 0.5) * CELL + 4:g}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="11">'
                   f'{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


PORTRAIT_SIZE = 400
ISOCLINE_POINTS = 256


def render_portrait(bmap: BinaryMap, iso: Isocline) -> str:
    """Dots at the centers of present cells in the unit square, plus the isocline.

    Row 0 is drawn at the top, column 0 at the left, so nested matrices
    crowd the upper-left corner.
    """
    m, n = bmap.shape
    S = PORTRAIT_SIZE
    pad = 10
    out = _header(S + 2 * pad, S + 2 * pad)
    out.append(f'<rect x="{pad}" y="{pad}" width="{S}" height="{S}" fill="none" stroke="#000000"/>')
    r = max(0.5, min(4.0, 0.4 * S / max(m, n)))
    for i, j in zip(*np.nonzero(bmap.bits)):
        cx = pad + S * (j + 0.5) / n
        cy = pad + S * (i + 0.5) / m
        out.append(f'<circle class="presence" cx="{cx:.4f}" cy="{cy:.4f}" r="{r:.3f}" fill="#1f4e9c"/>')
    xs = np.linspace(0.0, 1.0, ISOCLINE_POINTS)
    ys = iso.y_of_x(xs)
    pts = " ".join(f"{pad + S * x:.4f},{pad + S * y:.4f}" for x, y in zip(xs, ys))
    out.append(f'<polyline class="isocline" points="{pts}" fill="none" stroke="#d62728" '
               f'stroke-width="1.5" data-p="{iso.p!r}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
