"""Domain types: hierarchical codes, scale pairs, patent records and maps.

Hierarchies are dot-delimited paths; the level-``k`` identity of a code is
its first ``k`` segments.  Levels are 1-based with 1 the coarsest.
"""
from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, LevelRangeError, PreconditionError

SEPARATOR = "."


class Dimension(enum.Enum):
    GEO = "geo"
    TECH = "tech"


@dataclass(frozen=True)
class CodePath:
    segments: tuple[str, ...]
    dimension: Dimension = Dimension.GEO

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a code path needs at least one segment")
        for seg in self.segments:
            if not seg or SEPARATOR in seg:
                raise ValueError(f"invalid code segment {seg!r}")

    @classmethod
    def parse(cls, text: str, dimension: Dimension = Dimension.GEO) -> "CodePath":
        return cls(tuple(text.strip().split(SEPARATOR)), dimension)

    @property
    def depth(self) -> int:
        return len(self.segments)

    def truncate(self, level: int) -> "CodePath":
        return truncate_code(self, level)

    def sort_key(self):
        return self.segments

    def __str__(self):
        return SEPARATOR.join(self.segments)


def truncate_code(code: CodePath, level: int) -> CodePath:
    """First ``level`` segments of ``code``."""
    if not 1 <= level <= code.depth:
        raise LevelRangeError(
            f"cannot truncate {code} (depth {code.depth}) to level {level}")
    if level == code.depth:
        return code
    return CodePath(code.segments[:level], code.dimension)


@dataclass(frozen=True, order=True)
class ScalePair:
    geo_level: int
    tech_level: int

    def __post_init__(self):
        if self.geo_level < 1 or self.tech_level < 1:
            raise LevelRangeError(f"scale levels must be >= 1, got {self}")

    def __str__(self):
        return f"(geo {self.geo_level}, tech {self.tech_level})"


@dataclass(frozen=True)
class PatentRecord:
    id: str
    geo_codes: tuple[CodePath, ...]
    tech_codes: tuple[CodePath, ...]
    date: dt.date | None = None

    @classmethod
    def from_strings(cls, id, geo, tech, date=None):
        return cls(
            id,
            tuple(CodePath.parse(g, Dimension.GEO) for g in geo),
            tuple(CodePath.parse(t, Dimension.TECH) for t in tech),
            date,
        )

    def to_json_obj(self) -> dict:
        obj = {"id": self.id,
               "geo": [str(c) for c in self.geo_codes],
               "tech": [str(c) for c in self.tech_codes]}
        if self.date is not None:
            obj["date"] = self.date.isoformat()
        return obj


def sorted_labels(labels: Iterable[CodePath]) -> tuple[CodePath, ...]:
    return tuple(sorted(set(labels), key=CodePath.sort_key))


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedMap:
    """Nonnegative location x technology weights at one scale pair."""

    scale: ScalePair
    row_labels: tuple[CodePath, ...]
    col_labels: tuple[CodePath, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, float)
        if w.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(f"weights shape {w.shape} does not match labels")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def blocks_from_labels(labels: Sequence[CodePath], parent_level: int) -> tuple[range, ...]:
    """Contiguous row groups sharing the same ``parent_level`` prefix.

    ``parent_level == 0`` gives a single block over all rows.
    """
    n = len(labels)
    if n == 0:
        return ()
    if parent_level <= 0:
        return (range(0, n),)
    blocks = []
    seen = set()
    start = 0
    prev = truncate_code(labels[0], parent_level)
    for i in range(1, n):
        cur = truncate_code(labels[i], parent_level)
        if cur != prev:
            seen.add(prev)
            if cur in seen:
                raise PreconditionError(
                    f"rows with prefix {cur} are not contiguous")
            blocks.append(range(start, i))
            start, prev = i, cur
    blocks.append(range(start, n))
    return tuple(blocks)


@dataclass(frozen=True, eq=False)
class BinaryMap:
    """0/1 incidence matrix with labels and an optional row-block partition.

    ``row_blocks`` is ``None`` once the rows have been permuted (packing
    destroys block contiguity).
    """

    scale: ScalePair
    row_labels: tuple[CodePath, ...]
    col_labels: tuple[CodePath, ...]
    bits: np.ndarray
    row_blocks: tuple[range, ...] | None = field(default=None)

    def __post_init__(self):
        b = _frozen(self.bits, np.uint8)
        if b.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError(f"bits shape {b.shape} does not match labels")
        if (b > 1).any():
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", b)
        if self.row_blocks is not None:
            covered = [i for blk in self.row_blocks for i in blk]
            if covered != list(range(b.shape[0])) or any(len(blk) == 0 for blk in self.row_blocks):
                raise ValueError("row_blocks must partition the rows into non-empty contiguous groups")

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def fill(self) -> float:
        m, n = self.bits.shape
        return float(self.bits.sum()) / (m * n) if m and n else 0.0

    def with_blocks(self, parent_level: int) -> "BinaryMap":
        return BinaryMap(self.scale, self.row_labels, self.col_labels, self.bits,
                         blocks_from_labels(self.row_labels, parent_level))

    def transposed(self, parent_level: int | None = None) -> "BinaryMap":
        """Swap rows and columns; blocks come from the old column labels."""
        blocks = None
        if parent_level is not None:
            blocks = blocks_from_labels(self.col_labels, parent_level)
        return BinaryMap(ScalePair(self.scale.tech_level, self.scale.geo_level),
                         self.col_labels, self.row_labels, self.bits.T, blocks)


def synthetic_labels(n: int, prefix: str, dimension: Dimension) -> tuple[CodePath, ...]:
    width = len(str(max(n - 1, 0)))
    return tuple(CodePath((f"{prefix}{i:0{width}d}",), dimension) for i in range(n))


def binary_map_from_array(bits, scale: ScalePair | None = None,
                          row_labels=None, col_labels=None,
                          single_block: bool = True) -> BinaryMap:
    """Wrap a bare 0/1 array with generated labels (``r0..``, ``c0..``)."""
    bits = np.asarray(bits)
    m, n = bits.shape
    row_labels = tuple(row_labels) if row_labels is not None else synthetic_labels(m, "r", Dimension.GEO)
    col_labels = tuple(col_labels) if col_labels is not None else synthetic_labels(n, "c", Dimension.TECH)
    blocks = (range(0, m),) if single_block and m else None
    return BinaryMap(scale or ScalePair(1, 1), row_labels, col_labels, bits, blocks)


# --- validation -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    record_id: str
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    n_records: int
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def invalid_ids(self) -> frozenset[str]:
        return frozenset(v.record_id for v in self.violations)


def validate_hierarchy(records: Sequence[PatentRecord], finest_geo: int,
                       finest_tech: int) -> ValidationReport:
    """Check every record against the depth and duplication invariants."""
    if not records:
        raise InputError("no records to validate")
    violations = []
    for rec in records:
        for name, codes, dim, finest in (("geo", rec.geo_codes, Dimension.GEO, finest_geo),
                                         ("tech", rec.tech_codes, Dimension.TECH, finest_tech)):
            if not codes:
                violations.append(Violation(rec.id, f"empty {name} codes"))
                continue
            if len(set(codes)) != len(codes):
                violations.append(Violation(rec.id, f"duplicate {name} codes"))
            for c in codes:
                if c.dimension is not dim:
                    violations.append(Violation(rec.id, f"{c} is not a {name} code"))
                if c.depth < finest:
                    violations.append(Violation(
                        rec.id, f"{name} code {c} has depth {c.depth} < {finest}"))
    return ValidationReport(len(records), tuple(violations))
