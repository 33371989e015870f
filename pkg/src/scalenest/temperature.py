"""Nestedness temperature of packed binary matrices.

The perfect-nestedness boundary is the superellipse ``x**p + y**p = 1`` in
the unit square, with ``p`` chosen so the enclosed area equals the matrix
fill.  Cell ``(i, j)`` of an ``m x n`` matrix sits at
``x = (j + 0.5) / n``, ``y = (i + 0.5) / m``; presences belong inside the
curve, absences outside.  A misplaced cell scores the squared distance to
the curve along the ``(1, 1)`` diagonal, relative to the diagonal chord of
the unit square through that cell.  ``T = 100 * mean(u) / U_MAX``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFillError
from .model import BinaryMap

U_MAX = 0.04145
FILL_MIN = 1e-4
FILL_MAX = 1 - 1e-4
LOG_P_RANGE = (-8.0, 8.0)
AREA_TOL = 1e-9
CROSSING_TOL = 1e-10
# halvings needed to shrink a unit interval below CROSSING_TOL
_CROSSING_STEPS = math.ceil(math.log2(1.0 / CROSSING_TOL))


def superellipse_area(p: float) -> float:
    """Area of ``{x, y >= 0 : x**p + y**p <= 1}``: ``G(1+1/p)**2 / G(1+2/p)``."""
    return math.exp(2.0 * math.lgamma(1.0 + 1.0 / p) - math.lgamma(1.0 + 2.0 / p))


@dataclass(frozen=True)
class Isocline:
    p: float
    fill: float

    def area(self) -> float:
        return superellipse_area(self.p)

    def y_of_x(self, x):
        """Boundary height at ``x`` (vectorized)."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return (1.0 - x ** self.p) ** (1.0 / self.p)

    def contains(self, x, y):
        return x ** self.p + y ** self.p <= 1.0


def _check_fill(fill):
    if not (FILL_MIN <= fill <= FILL_MAX):
        raise DegenerateFillError(
            f"fill {fill:.6g} outside [{FILL_MIN}, {FILL_MAX}]")


def solve_isocline(fill: float) -> Isocline:
    """Find ``p`` whose superellipse area equals ``fill``, by bisection on ``ln p``."""
    _check_fill(fill)
    lo, hi = LOG_P_RANGE
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a = superellipse_area(math.exp(mid))
        if abs(a - fill) < AREA_TOL:
            break
        if a < fill:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return Isocline(math.exp(mid), fill)


def _centers(m, n):
    x = (np.arange(n) + 0.5) / n
    y = (np.arange(m) + 0.5) / m
    return np.broadcast_to(x[None, :], (m, n)), np.broadcast_to(y[:, None], (m, n))


def _crossing(x, y, p):
    """Signed step ``t`` along (1, 1) with ``(x+t)**p + (y+t)**p == 1`` (vectorized)."""
    lo = -np.minimum(x, y)
    hi = 1.0 - np.maximum(x, y)
    for _ in range(_CROSSING_STEPS):
        mid = 0.5 * (lo + hi)
        above = (x + mid) ** p + (y + mid) ** p > 1.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def _cell_u(x, y, present, p):
    """Unexpectedness for arrays of cell centers; zero where the cell agrees."""
    level = x ** p + y ** p
    inside = level <= 1.0
    wrong = (present & ~inside) | (~present & inside & (level != 1.0))
    u = np.zeros(np.shape(x))
    if wrong.any():
        xw, yw = x[wrong], y[wrong]
        t = _crossing(xw, yw, p)
        u[wrong] = (t / (1.0 - np.abs(xw - yw))) ** 2
    return u


def unexpectedness(cell, shape, iso: Isocline) -> float:
    """Unexpectedness of one cell ``(i, j, bit)`` in a packed ``(m, n)`` matrix."""
    i, j, bit = cell
    m, n = shape
    if not (0 <= i < m and 0 <= j < n):
        raise IndexError(f"cell ({i}, {j}) outside a {m}x{n} matrix")
    x = np.array([(j + 0.5) / n])
    y = np.array([(i + 0.5) / m])
    return float(_cell_u(x, y, np.array([bool(bit)]), iso.p)[0])


def unexpectedness_matrix(bits, iso: Isocline) -> np.ndarray:
    bits = np.asarray(bits)
    x, y = _centers(*bits.shape)
    return _cell_u(x, y, bits.astype(bool), iso.p)


@dataclass(frozen=True)
class TemperatureReport:
    T: float
    fill: float
    p: float
    unexpectedness_sum: float
    unexpected_cells: tuple  # (row, col, u) with u > 0, row-major
    matrix_shape: tuple[int, int]


def _temperature(bits):
    bits = np.asarray(bits)
    m, n = bits.shape
    fill = float(bits.sum()) / (m * n)
    iso = solve_isocline(fill)
    u = unexpectedness_matrix(bits, iso)
    total = math.fsum(u.ravel())
    return 100.0 * (total / (m * n)) / U_MAX, fill, iso, u, total


def temperature_of(bits) -> float:
    """T of a bare packed 0/1 array."""
    return _temperature(bits)[0]


def measure_temperature(bmap: BinaryMap) -> TemperatureReport:
    """Temperature of a pruned, packed map.  Lower is more nested."""
    T, fill, iso, u, total = _temperature(bmap.bits)
    rr, cc = np.nonzero(u > 0)
    cells = tuple((int(i), int(j), float(u[i, j])) for i, j in zip(rr, cc))
    return TemperatureReport(T, fill, iso.p, total, cells, bmap.shape)
