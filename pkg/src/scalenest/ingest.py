"""Record parsing, equal-share attribution and hierarchical aggregation."""
from __future__ import annotations

import datetime as dt
import enum
import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import DuplicateIdError, InputError, LevelRangeError, ParseError
from .model import (CodePath, Dimension, PatentRecord, ScalePair, WeightedMap,
                    sorted_labels, truncate_code, validate_hierarchy)

log = logging.getLogger(__name__)


class InvalidRecordPolicy(enum.Enum):
    REJECT = "reject"
    SKIP = "skip"


@dataclass(frozen=True)
class IngestConfig:
    finest_geo_level: int
    finest_tech_level: int
    date_window: tuple[dt.date, dt.date] | None = None
    invalid_record_policy: InvalidRecordPolicy = InvalidRecordPolicy.REJECT

    def __post_init__(self):
        if self.finest_geo_level < 1 or self.finest_tech_level < 1:
            raise ValueError("finest levels must be >= 1")
        if self.date_window is not None and self.date_window[0] > self.date_window[1]:
            raise ValueError("date window start is after its end")

    @property
    def finest_scale(self) -> ScalePair:
        return ScalePair(self.finest_geo_level, self.finest_tech_level)


@dataclass
class IngestStats:
    parsed: int = 0
    filtered: int = 0
    skipped: int = 0
    used: int = 0

    def manifest_lines(self):
        return [f"records_parsed = {self.parsed}",
                f"records_filtered = {self.filtered}",
                f"records_skipped = {self.skipped}",
                f"records_used = {self.used}"]


_IPC_RE = re.compile(r"^\s*([A-H])(\d{2})([A-Z])\s*(\d{1,4})\s*/\s*(\d{2,6})\s*$")


def ipc_to_path(code: str) -> str:
    """Map a native IPC symbol such as ``A01B 33/00`` to ``A.A01.A01B.A01B33-00``."""
    m = _IPC_RE.match(code)
    if not m:
        raise ValueError(f"not an IPC group symbol: {code!r}")
    sec, cls, sub, grp, subgrp = m.groups()
    return f"{sec}.{sec}{cls}.{sec}{cls}{sub}.{sec}{cls}{sub}{grp}-{subgrp}"


def read_rewrite_table(stream: TextIO) -> dict[str, str]:
    """``native = dotted.path`` lines; ``#`` starts a comment."""
    table = {}
    for lineno, line in enumerate(stream, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, "expected 'native = dotted.path'")
        k, v = (s.strip() for s in line.split("=", 1))
        table[k] = v
    return table


def _codes(obj, key, lineno, dim, rewrite):
    if key not in obj:
        raise ParseError(lineno, f"missing key {key!r}")
    val = obj[key]
    if not isinstance(val, list) or not all(isinstance(s, str) for s in val):
        raise ParseError(lineno, f"{key!r} must be an array of strings")
    out = []
    for s in val:
        if rewrite is not None:
            s = rewrite.get(s, s)
        try:
            out.append(CodePath.parse(s, dim))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    return tuple(out)


def parse_patents(stream: Iterable[str], cfg: IngestConfig | None = None,
                  rewrite: Mapping[str, str] | None = None) -> list[PatentRecord]:
    """Parse line-delimited JSON records, in file order.

    Blank lines are ignored.  When ``cfg`` carries a date window the filter
    is applied here; records without a date fall outside any window.
    """
    records = []
    ids: dict[str, int] = {}
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise ParseError(lineno, "record must be a JSON object")
        rid = obj.get("id")
        if not isinstance(rid, str) or not rid:
            raise ParseError(lineno, "missing or non-string 'id'")
        if rid in ids:
            raise DuplicateIdError(rid, lineno)
        ids[rid] = lineno
        geo = _codes(obj, "geo", lineno, Dimension.GEO, rewrite)
        tech = _codes(obj, "tech", lineno, Dimension.TECH, rewrite)
        date = None
        if obj.get("date") is not None:
            try:
                date = dt.date.fromisoformat(obj["date"])
            except (TypeError, ValueError):
                raise ParseError(lineno, f"bad date {obj['date']!r}") from None
        records.append(PatentRecord(rid, geo, tech, date))
    if cfg is not None and cfg.date_window is not None:
        records, _ = apply_date_window(records, cfg.date_window)
    return records


def apply_date_window(records, window):
    if window is None:
        return list(records), 0
    start, end = window
    kept = [r for r in records if r.date is not None and start <= r.date <= end]
    return kept, len(records) - len(kept)


def write_records(records: Iterable[PatentRecord], stream: TextIO) -> None:
    for rec in records:
        stream.write(json.dumps(rec.to_json_obj(), separators=(",", ":")) + "\n")


def infer_depths(records: Sequence[PatentRecord]) -> tuple[int, int]:
    """Shallowest code depth per dimension: the finest level every record reaches."""
    geo = [c.depth for r in records for c in r.geo_codes]
    tech = [c.depth for r in records for c in r.tech_codes]
    if not geo or not tech:
        raise InputError("records carry no codes")
    return min(geo), min(tech)


def prepare_records(records: Sequence[PatentRecord], cfg: IngestConfig,
                    stats: IngestStats | None = None) -> list[PatentRecord]:
    """Date-filter and validate; apply the invalid-record policy."""
    stats = stats if stats is not None else IngestStats()
    stats.parsed = len(records)
    records, stats.filtered = apply_date_window(records, cfg.date_window)
    if not records:
        raise InputError("no records left after date filtering")
    report = validate_hierarchy(records, cfg.finest_geo_level, cfg.finest_tech_level)
    if not report.ok:
        if cfg.invalid_record_policy is InvalidRecordPolicy.REJECT:
            first = report.violations[0]
            raise InputError(f"{len(report.invalid_ids)} invalid record(s); "
                             f"first: {first.record_id}: {first.reason}")
        bad = report.invalid_ids
        for v in report.violations:
            log.warning("skipping record %s: %s", v.record_id, v.reason)
        records = [r for r in records if r.id not in bad]
        stats.skipped = len(bad)
    if not records:
        raise InputError("zero valid records")
    stats.used = len(records)
    return records


def build_finest_map(records: Sequence[PatentRecord], cfg: IngestConfig) -> WeightedMap:
    """Equal-share attribution at the finest configured levels.

    Each record spreads a total weight of one uniformly over the Cartesian
    product of its (deduplicated) geo and tech codes.
    """
    if not records:
        raise InputError("no records")
    g, t = cfg.finest_geo_level, cfg.finest_tech_level
    per_rec = []
    for rec in records:
        geo = [truncate_code(c, g) for c in dict.fromkeys(rec.geo_codes)]
        tech = [truncate_code(c, t) for c in dict.fromkeys(rec.tech_codes)]
        per_rec.append((geo, tech))
    rows = sorted_labels(c for geo, _ in per_rec for c in geo)
    cols = sorted_labels(c for _, tech in per_rec for c in tech)
    ri = {c: i for i, c in enumerate(rows)}
    ci = {c: j for j, c in enumerate(cols)}
    W = np.zeros((len(rows), len(cols)))
    for geo, tech in per_rec:
        share = 1.0 / (len(geo) * len(tech))
        for a in geo:
            for b in tech:
                W[ri[a], ci[b]] += share
    return WeightedMap(cfg.finest_scale, rows, cols, W)


def _grouping(labels, level):
    targets = sorted_labels(truncate_code(c, level) for c in labels)
    index = {c: k for k, c in enumerate(targets)}
    G = np.zeros((len(targets), len(labels)))
    for j, c in enumerate(labels):
        G[index[truncate_code(c, level)], j] = 1.0
    return targets, G


def aggregate_map(wmap: WeightedMap, target: ScalePair) -> WeightedMap:
    """Sum weights over rows and columns sharing the same truncated labels."""
    src = wmap.scale
    if target.geo_level > src.geo_level or target.tech_level > src.tech_level:
        raise LevelRangeError(f"cannot aggregate {src} to finer scale {target}")
    if target == src:
        return wmap
    rows, R = _grouping(wmap.row_labels, target.geo_level)
    cols, C = _grouping(wmap.col_labels, target.tech_level)
    return WeightedMap(target, rows, cols, R @ wmap.weights @ C.T)


def build_all_maps(records: Sequence[PatentRecord], cfg: IngestConfig) -> dict[ScalePair, WeightedMap]:
    finest = build_finest_map(records, cfg)
    return {ScalePair(g, t): aggregate_map(finest, ScalePair(g, t))
            for g in range(1, cfg.finest_geo_level + 1)
            for t in range(1, cfg.finest_tech_level + 1)}
