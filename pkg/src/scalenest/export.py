"""CSV readers and writers for maps, rankings, temperature reports and ensembles.

Floats are written with ``repr`` so that files round-trip exactly and are
byte-stable across runs.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .errors import ParseError
from .model import BinaryMap, CodePath, Dimension, ScalePair, blocks_from_labels
from .rank import FitnessResult
from .recap import NullEnsemble
from .temperature import TemperatureReport


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def binary_map_to_csv(bmap: BinaryMap) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow([""] + [str(c) for c in bmap.col_labels])
    for label, row in zip(bmap.row_labels, bmap.bits):
        w.writerow([str(label)] + [str(int(b)) for b in row])
    return buf.getvalue()


def binary_map_from_csv(text: str, scale: ScalePair | None = None) -> BinaryMap:
    """Parse a map export.  Without ``scale`` the levels are read off the label depths."""
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise ParseError(1, "binary map CSV needs a header and at least one row")
    cols = tuple(CodePath.parse(c, Dimension.TECH) for c in rows[0][1:])
    labels, bits = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(cols) + 1:
            raise ParseError(lineno, f"expected {len(cols) + 1} fields, got {len(row)}")
        if any(c not in ("0", "1") for c in row[1:]):
            raise ParseError(lineno, "cells must be '0' or '1'")
        labels.append(CodePath.parse(row[0], Dimension.GEO))
        bits.append([int(c) for c in row[1:]])
    if scale is None:
        scale = ScalePair(min(l.depth for l in labels), min(c.depth for c in cols))
    labels = tuple(labels)
    try:
        blocks = blocks_from_labels(labels, scale.geo_level - 1)
    except ValueError:
        blocks = None
    return BinaryMap(scale, labels, cols, np.array(bits, dtype=np.uint8), blocks)


def ranking_to_csv(labels, values) -> str:
    """``label,value`` sorted by value, largest first (ties by label order)."""
    order = sorted(range(len(labels)), key=lambda i: (-values[i], i))
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["label", "value"])
    for i in order:
        w.writerow([str(labels[i]), repr(float(values[i]))])
    return buf.getvalue()


def fitness_to_csv(bmap: BinaryMap, ranks: FitnessResult) -> tuple[str, str]:
    return (ranking_to_csv(bmap.row_labels, ranks.fitness),
            ranking_to_csv(bmap.col_labels, ranks.complexity))


def temperature_to_csv(report: TemperatureReport, packed: BinaryMap) -> str:
    m, n = report.matrix_shape
    buf = io.StringIO()
    buf.write(f"# T={report.T!r} fill={report.fill!r} m={m} n={n}\n")
    w = _writer(buf)
    w.writerow(["row_label", "col_label", "u"])
    for i, j, u in report.unexpected_cells:
        w.writerow([str(packed.row_labels[i]), str(packed.col_labels[j]), repr(u)])
    return buf.getvalue()


def ensemble_to_csv(ens: NullEnsemble) -> str:
    buf = io.StringIO()
    buf.write(f"# mean={ens.mean!r} std={ens.std!r} seed={ens.seed} "
              f"degenerate_redraws={ens.degenerate_redraws}\n")
    w = _writer(buf)
    w.writerow(["index", "temperature"])
    for i, t in zip(ens.indices, ens.temperatures):
        w.writerow([i, repr(t)])
    return buf.getvalue()
