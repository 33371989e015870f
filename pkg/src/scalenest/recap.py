"""Reshuffled-capabilities null model: block-constrained column shuffles.

Within every row block (the children of one coarser-level parent) each
column's ones are placed uniformly at random among the block's rows.
Column sums, globally and per block, are preserved; row sums are free.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .binarize import _prune_masks
from .errors import DegenerateInputError, PathologicalInputError, PreconditionError
from .model import BinaryMap
from .rank import DEFAULT_MAX_ITER, DEFAULT_TOL, fitness_complexity_arrays, packing_order
from .temperature import temperature_of

log = logging.getLogger(__name__)

THREADS_ENV = "SCALENEST_THREADS"
# below this many samples worker start-up costs more than it saves
_MIN_PARALLEL_SAMPLES = 64


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for sample ``index`` of the ensemble keyed by ``seed``."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _shuffle_bits(bits, blocks, seed, index):
    m, n = bits.shape
    # one uniform key per cell; the (block, column) segment of this matrix is
    # that pair's private stream, so block/column results never interact
    keys = sample_rng(seed, index).random((m, n))
    out = np.empty_like(bits)
    for blk in blocks:
        sl = slice(blk.start, blk.stop)
        seg = bits[sl]
        if len(blk) == 1:
            out[sl] = seg
            continue
        k = seg.sum(axis=0)
        ranks = np.argsort(np.argsort(keys[sl], axis=0, kind="stable"), axis=0, kind="stable")
        out[sl] = ranks < k[None, :]
    return out


def recap_sample(bmap: BinaryMap, seed: int, index: int) -> BinaryMap:
    """One null matrix, fully determined by ``(seed, index)``."""
    if bmap.row_blocks is None:
        raise PreconditionError("ReCap needs a row-block partition")
    bits = _shuffle_bits(bmap.bits, bmap.row_blocks, seed, index)
    return BinaryMap(bmap.scale, bmap.row_labels, bmap.col_labels, bits, bmap.row_blocks)


def packed_temperature(bits, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Prune, rank, pack and measure a bare array; ``None`` if degenerate."""
    rows, cols = _prune_masks(bits)
    if rows.sum() < 2 or cols.sum() < 2:
        return None
    sub = bits[np.ix_(rows, cols)]
    F, Q, _, _ = fitness_complexity_arrays(sub, max_iter, tol)
    r, c = packing_order(sub, F, Q)
    try:
        return temperature_of(sub[np.ix_(r, c)])
    except DegenerateInputError:
        return None


def _sample_temperatures(bits, blocks, seed, indices, max_iter, tol):
    return [packed_temperature(_shuffle_bits(bits, blocks, seed, i), max_iter, tol)
            for i in indices]


@dataclass(frozen=True)
class NullEnsemble:
    n_samples: int
    temperatures: tuple[float, ...]
    mean: float
    std: float
    seed: int
    indices: tuple[int, ...]
    degenerate_redraws: int = 0


def _run(bits, blocks, seed, indices, max_iter, tol, n_jobs):
    if n_jobs <= 1 or len(indices) < _MIN_PARALLEL_SAMPLES:
        return _sample_temperatures(bits, blocks, seed, indices, max_iter, tol)
    from joblib import Parallel, delayed

    chunks = np.array_split(np.asarray(indices), n_jobs)
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_sample_temperatures)(bits, blocks, seed, list(ch), max_iter, tol)
        for ch in chunks if len(ch))
    return [t for part in parts for t in part]


def null_ensemble(bmap: BinaryMap, n: int = 1000, seed: int = 0, *,
                  max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
                  n_jobs: int | None = None) -> NullEnsemble:
    """Temperatures of ``n`` ReCap samples of ``bmap``.

    Each sample is pruned, re-ranked and re-packed before measurement.  A
    sample that collapses under pruning is replaced by a redraw with the
    next unused index; more than ``n / 2`` redraws is an error.  Results
    depend only on ``(bmap, n, seed)``, not on ``n_jobs``.
    """
    if n < 2:
        raise ValueError("an ensemble needs at least 2 samples")
    if bmap.row_blocks is None:
        raise PreconditionError("ReCap needs a row-block partition")
    n_jobs = worker_count() if n_jobs is None else n_jobs
    bits, blocks = np.asarray(bmap.bits), bmap.row_blocks

    slots_idx = list(range(n))
    slots_T: list[float | None] = _run(bits, blocks, seed, slots_idx, max_iter, tol, n_jobs)
    next_index = n
    redraws = 0
    while True:
        bad = [k for k, t in enumerate(slots_T) if t is None]
        if not bad:
            break
        redraws += len(bad)
        if redraws > n / 2:
            raise PathologicalInputError(
                f"{redraws} degenerate null samples for a {bmap.shape[0]}x{bmap.shape[1]} "
                f"map at {bmap.scale} (limit {n // 2})")
        fresh = list(range(next_index, next_index + len(bad)))
        next_index += len(bad)
        for k, i, t in zip(bad, fresh, _run(bits, blocks, seed, fresh, max_iter, tol, n_jobs)):
            slots_idx[k], slots_T[k] = i, t
    temps = np.array(slots_T, dtype=float)
    if (temps == temps[0]).all():
        # exact, so a fixed null is reported as zero spread, not rounding noise
        mean, std = float(temps[0]), 0.0
    else:
        mean = math.fsum(temps) / n
        std = math.sqrt(math.fsum((temps - mean) ** 2) / n)
    return NullEnsemble(n, tuple(float(t) for t in temps), mean, std, int(seed),
                        tuple(slots_idx), redraws)


@dataclass(frozen=True)
class ZScore:
    t_empirical: float
    z: float | None
    empirical_p: float
    degenerate: bool = False


def z_score(t_emp: float, ens: NullEnsemble) -> ZScore:
    """Signed distance of ``t_emp`` from the null mean, in null standard deviations.

    ``empirical_p`` counts null samples at least as far out on the same side
    of the mean as ``t_emp``: ``(1 + count) / (n + 1)``.  A zero-spread
    ensemble yields no z and ``p = 1``.
    """
    temps = np.asarray(ens.temperatures)
    if ens.std == 0:
        return ZScore(t_emp, None, 1.0, True)
    z = (t_emp - ens.mean) / ens.std
    if t_emp < ens.mean:
        count = int((temps <= t_emp).sum())
    elif t_emp > ens.mean:
        count = int((temps >= t_emp).sum())
    else:
        count = len(temps)
    return ZScore(t_emp, z, min(1.0, (1 + count) / (len(temps) + 1)))
