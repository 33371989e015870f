"""Fitness-complexity ranking and nestedness packing of binary maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import PreconditionError, ShapeError
from .model import BinaryMap

DEFAULT_MAX_ITER = 1000
DEFAULT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FitnessResult:
    fitness: np.ndarray
    complexity: np.ndarray
    iterations: int
    converged: bool


# smallest fitness still safe to invert and sum without overflow
_FLOOR = 1e-250
# consecutive iterations with unchanged rank order that count as converged
RANK_STABLE_ITERS = 10


@njit(cache=True)
def _to_unit_mean(v):
    lo = v.min()
    if lo == v.max():
        # a constant vector is exactly ones; dividing by a rounded mean is not
        v[:] = 1.0
    else:
        v /= v.mean()


@njit(cache=True)
def _fc_loop(M, max_iter, tol):
    m, n = M.shape
    F = np.ones(m)
    Q = np.ones(n)
    Fn = np.empty(m)
    Qn = np.empty(n)
    rF = np.argsort(F, kind="mergesort")
    rQ = np.argsort(Q, kind="mergesort")
    stable = 0
    for it in range(1, max_iter + 1):
        for i in range(m):
            acc = 0.0
            for j in range(n):
                if M[i, j]:
                    acc += Q[j]
            Fn[i] = acc
        for j in range(n):
            acc = 0.0
            for i in range(m):
                if M[i, j]:
                    acc += 1.0 / F[i]
            Qn[j] = 1.0 / acc
        _to_unit_mean(Fn)
        _to_unit_mean(Qn)
        dF = 0.0
        for i in range(m):
            d = abs(Fn[i] - F[i]) / F[i]
            if d > dF:
                dF = d
        dQ = 0.0
        for j in range(n):
            d = abs(Qn[j] - Q[j]) / Q[j]
            if d > dQ:
                dQ = d
        F[:] = Fn
        Q[:] = Qn
        nF = np.argsort(F, kind="mergesort")
        nQ = np.argsort(Q, kind="mergesort")
        if (nF == rF).all() and (nQ == rQ).all():
            stable += 1
        else:
            stable = 0
        rF, rQ = nF, nQ
        if dF < tol and dQ < tol:
            return F, Q, it, True
        if F.min() < _FLOOR or Q.min() < _FLOOR:
            # nested matrices drive the weakest scores towards zero; the
            # ordering is settled long before they would underflow
            return F, Q, it, stable >= RANK_STABLE_ITERS
    return F, Q, max_iter, stable >= RANK_STABLE_ITERS


def fitness_complexity_arrays(bits, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Fixed-point iteration on a bare 0/1 array.

    Returns ``(fitness, complexity, iterations, converged)``.  Both updates
    use the previous step's vectors and each is rescaled to mean 1.
    """
    M = np.ascontiguousarray(bits, dtype=np.uint8)
    if M.ndim != 2 or not M.any(axis=1).all() or not M.any(axis=0).all():
        raise PreconditionError("fitness-complexity needs a pruned map (zero row or column found)")
    F, Q, it, ok = _fc_loop(M, int(max_iter), float(tol))
    return F, Q, int(it), bool(ok)


def fitness_complexity(bmap: BinaryMap, max_iter: int = DEFAULT_MAX_ITER,
                       tol: float = DEFAULT_TOL) -> FitnessResult:
    """Coupled fitness (rows) / complexity (columns) scores, mean-normalized.

    Stops when the largest relative change of both vectors drops below
    ``tol``, when the weakest scores approach underflow, or after
    ``max_iter`` steps.  ``converged`` is true for a tolerance stop, and
    also when the rank order of both vectors held for the last
    ``RANK_STABLE_ITERS`` iterations even though values still drift.
    """
    F, Q, it, ok = fitness_complexity_arrays(bmap.bits, max_iter, tol)
    F.setflags(write=False)
    Q.setflags(write=False)
    return FitnessResult(F, Q, it, ok)


def packing_order(bits, fitness, complexity):
    """Row and column permutations that put the most nested corner top-left.

    Rows: descending fitness, then descending degree, then original order.
    Columns: ascending complexity, then descending ubiquity, then original order.
    """
    bits = np.asarray(bits)
    deg = bits.sum(axis=1)
    ubi = bits.sum(axis=0)
    m, n = bits.shape
    # lexsort: last key is primary
    rows = np.lexsort((np.arange(m), -deg, -np.asarray(fitness)))
    cols = np.lexsort((np.arange(n), -ubi, np.asarray(complexity)))
    return rows, cols


def pack_matrix(bmap: BinaryMap, ranks: FitnessResult):
    """Reorder ``bmap`` by its ranking.

    Returns ``(packed_map, row_perm, col_perm)`` where ``packed.bits ==
    bmap.bits[row_perm][:, col_perm]``.  The packed map has no row blocks.
    """
    m, n = bmap.shape
    if ranks.fitness.shape != (m,) or ranks.complexity.shape != (n,):
        raise ShapeError(f"ranking shapes {ranks.fitness.shape}/{ranks.complexity.shape} "
                         f"do not match map {m}x{n}")
    rows, cols = packing_order(bmap.bits, ranks.fitness, ranks.complexity)
    packed = BinaryMap(bmap.scale,
                       tuple(bmap.row_labels[i] for i in rows),
                       tuple(bmap.col_labels[j] for j in cols),
                       bmap.bits[np.ix_(rows, cols)], None)
    return packed, rows, cols


def rank_and_pack(bmap: BinaryMap, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    ranks = fitness_complexity(bmap, max_iter, tol)
    packed, rows, cols = pack_matrix(bmap, ranks)
    return packed, ranks, rows, cols
