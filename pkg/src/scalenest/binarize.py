"""Revealed comparative advantage and binarization of weighted maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DegenerateMatrixError
from .model import BinaryMap, WeightedMap, blocks_from_labels


@dataclass(frozen=True)
class RcaConfig:
    threshold: float = 1.0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"RCA threshold must be positive, got {self.threshold}")


def rca_matrix(wmap) -> np.ndarray:
    """Balassa index of every cell.

    ``RCA[c, t] = (W[c, t] / W[c, :].sum()) / (W[:, t].sum() / W.sum())``.
    Cells in an all-zero row or column get 0.
    """
    W = np.asarray(wmap.weights if isinstance(wmap, WeightedMap) else wmap, dtype=float)
    total = W.sum()
    if not total > 0:
        raise DegenerateInputError("RCA of an all-zero map is undefined")
    row = W.sum(axis=1, keepdims=True)
    col = W.sum(axis=0, keepdims=True)
    num = np.divide(W, row, out=np.zeros_like(W), where=row > 0)
    den = col / total
    return np.divide(num, den, out=np.zeros_like(W), where=(den > 0) & (row > 0))


def threshold_binarize(rca, template: WeightedMap, cfg: RcaConfig = RcaConfig()) -> BinaryMap:
    """``bit = 1`` iff ``RCA >= threshold``; labels and scale from ``template``."""
    rca = np.asarray(rca, dtype=float)
    if not np.isfinite(rca).all() or (rca < 0).any():
        raise ValueError("RCA values must be finite and nonnegative")
    bits = (rca >= cfg.threshold).astype(np.uint8)
    blocks = blocks_from_labels(template.row_labels, template.scale.geo_level - 1)
    return BinaryMap(template.scale, template.row_labels, template.col_labels, bits, blocks)


def binarize(wmap: WeightedMap, cfg: RcaConfig = RcaConfig()) -> BinaryMap:
    return threshold_binarize(rca_matrix(wmap), wmap, cfg)


@dataclass(frozen=True)
class PruneReport:
    removed_rows: tuple = ()
    removed_cols: tuple = ()

    @property
    def empty(self) -> bool:
        return not self.removed_rows and not self.removed_cols


def _prune_masks(bits):
    rows = np.ones(bits.shape[0], bool)
    cols = np.ones(bits.shape[1], bool)
    while True:
        sub = bits[np.ix_(rows, cols)]
        r = sub.any(axis=1)
        c = sub.any(axis=0)
        if r.all() and c.all():
            return rows, cols
        rows[np.flatnonzero(rows)[~r]] = False
        cols[np.flatnonzero(cols)[~c]] = False


def prune_empty(bmap: BinaryMap) -> tuple[BinaryMap, PruneReport]:
    """Drop all-zero rows and columns until none remain.

    Raises :class:`DegenerateMatrixError` if fewer than 2 rows or 2 columns
    survive.  Row blocks are recomputed from the surviving labels.
    """
    rows, cols = _prune_masks(bmap.bits)
    if rows.sum() < 2 or cols.sum() < 2:
        raise DegenerateMatrixError(
            f"pruning {bmap.shape[0]}x{bmap.shape[1]} map at {bmap.scale} "
            f"leaves {int(rows.sum())}x{int(cols.sum())}")
    if rows.all() and cols.all():
        return bmap, PruneReport()
    report = PruneReport(
        tuple(l for l, keep in zip(bmap.row_labels, rows) if not keep),
        tuple(l for l, keep in zip(bmap.col_labels, cols) if not keep))
    row_labels = tuple(l for l, keep in zip(bmap.row_labels, rows) if keep)
    col_labels = tuple(l for l, keep in zip(bmap.col_labels, cols) if keep)
    blocks = None
    if bmap.row_blocks is not None:
        # keep the surviving members of each original block, renumbered
        new_index = np.cumsum(rows) - 1
        blocks = []
        for blk in bmap.row_blocks:
            alive = [int(new_index[i]) for i in blk if rows[i]]
            if alive:
                blocks.append(range(alive[0], alive[-1] + 1))
        blocks = tuple(blocks)
    return BinaryMap(bmap.scale, row_labels, col_labels,
                     bmap.bits[np.ix_(rows, cols)], blocks), report
