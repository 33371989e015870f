"""Significance of nestedness at every (geo level, tech level) combination."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .binarize import RcaConfig, binarize, prune_empty
from .errors import DegenerateInputError, InputError
from .ingest import IngestConfig, aggregate_map, build_finest_map
from .model import BinaryMap, ScalePair, WeightedMap
from .rank import DEFAULT_MAX_ITER, DEFAULT_TOL, rank_and_pack
from .recap import NullEnsemble, ZScore, null_ensemble, z_score
from .temperature import measure_temperature

log = logging.getLogger(__name__)

GRID_COLUMNS = ("geo_level", "tech_level", "rows", "cols", "fill", "T_emp",
                "null_mean", "null_std", "z", "p_emp", "n_samples", "degenerate")


@dataclass(frozen=True)
class GridConfig:
    ingest: IngestConfig
    rca: RcaConfig = RcaConfig()
    n_samples: int = 1000
    seed: int = 0
    sigma: float = 2.0
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    transpose: bool = False
    n_jobs: int | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if not self.sigma > 0:
            raise ValueError("significance threshold must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def cell_seed(run_seed: int, pair: ScalePair) -> int:
    """Per-cell seed derived from the run seed and the cell's levels only."""
    ss = np.random.SeedSequence(int(run_seed), spawn_key=(pair.geo_level, pair.tech_level))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class GridCell:
    pair: ScalePair
    rows: int | None = None
    cols: int | None = None
    fill: float | None = None
    t_emp: float | None = None
    ensemble: NullEnsemble | None = None
    zscore: ZScore | None = None
    degenerate: bool = False
    reason: str = ""
    packed: BinaryMap | None = field(default=None, repr=False)

    @property
    def z(self) -> float | None:
        return None if self.zscore is None else self.zscore.z

    @property
    def n_samples(self) -> int:
        return 0 if self.ensemble is None else self.ensemble.n_samples


def analyse_map(wmap: WeightedMap, cfg: GridConfig, seed: int) -> GridCell:
    """Binarize, prune, pack, measure, and test one weighted map against ReCap."""
    pair = wmap.scale
    try:
        bmap, _ = prune_empty(binarize(wmap, cfg.rca))
        packed, _, _, _ = rank_and_pack(bmap, cfg.max_iter, cfg.tol)
        report = measure_temperature(packed)
    except DegenerateInputError as exc:
        return GridCell(pair, degenerate=True, reason=str(exc))
    base = dict(rows=bmap.shape[0], cols=bmap.shape[1], fill=report.fill,
                t_emp=report.T, packed=packed)
    null_src = bmap
    if cfg.transpose:
        null_src = bmap.transposed(pair.tech_level - 1)
    try:
        ens = null_ensemble(null_src, cfg.n_samples, seed, max_iter=cfg.max_iter,
                            tol=cfg.tol, n_jobs=cfg.n_jobs)
    except DegenerateInputError as exc:
        return GridCell(pair, **base, degenerate=True, reason=str(exc))
    zs = z_score(report.T, ens)
    return GridCell(pair, **base, ensemble=ens, zscore=zs, degenerate=zs.degenerate,
                    reason="null ensemble has zero spread" if zs.degenerate else "")


def compute_cell(finest: WeightedMap, pair: ScalePair, cfg: GridConfig) -> GridCell:
    return analyse_map(aggregate_map(finest, pair), cfg, cell_seed(cfg.seed, pair))


@dataclass(frozen=True)
class ScaleGrid:
    cells: dict
    geo_depth: int
    tech_depth: int
    significance_threshold: float = 2.0

    def __post_init__(self):
        expected = {ScalePair(g, t) for g in range(1, self.geo_depth + 1)
                    for t in range(1, self.tech_depth + 1)}
        if set(self.cells) != expected:
            raise ValueError("grid must hold exactly one cell per scale pair")
        if not self.significance_threshold > 0:
            raise ValueError("threshold must be positive")

    def __getitem__(self, pair):
        if isinstance(pair, tuple):
            pair = ScalePair(*pair)
        return self.cells[pair]

    def ordered(self):
        return [self.cells[p] for p in sorted(self.cells)]


def compute_cells(records, cfg: GridConfig, pairs) -> dict:
    """Analyse only ``pairs``; identical to the matching cells of a full grid."""
    if not records:
        raise InputError("zero valid records")
    finest = build_finest_map(records, cfg.ingest)
    cells = {}
    for pair in pairs:
        log.info("scale %s", pair)
        cells[pair] = compute_cell(finest, pair, cfg)
    return cells


def compute_grid(records, cfg: GridConfig) -> ScaleGrid:
    """Run the full analysis at every scale pair.

    A cell's result depends on the records, the configuration and the run
    seed, never on which other cells are run.
    """
    G, T = cfg.ingest.finest_geo_level, cfg.ingest.finest_tech_level
    pairs = [ScalePair(g, t) for g in range(1, G + 1) for t in range(1, T + 1)]
    return ScaleGrid(compute_cells(records, cfg, pairs), G, T, cfg.sigma)


@dataclass(frozen=True)
class Frontier:
    nested_cells: frozenset
    antinested_cells: frozenset
    insignificant_cells: frozenset
    degenerate_cells: frozenset


def extract_frontier(grid: ScaleGrid) -> Frontier:
    """Classify cells by sign of z and ``|z| >= threshold``; degenerate cells apart."""
    thr = grid.significance_threshold
    nested, anti, insig, degen = set(), set(), set(), set()
    for pair, cell in grid.cells.items():
        z = cell.z
        if cell.degenerate or z is None:
            degen.add(pair)
        elif z <= -thr:
            nested.add(pair)
        elif z >= thr:
            anti.add(pair)
        else:
            insig.add(pair)
    return Frontier(frozenset(nested), frozenset(anti), frozenset(insig), frozenset(degen))


# --- CSV ------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def grid_rows(grid: ScaleGrid):
    for cell in grid.ordered():
        ens = cell.ensemble
        yield [cell.pair.geo_level, cell.pair.tech_level, cell.rows, cell.cols,
               cell.fill, cell.t_emp,
               None if ens is None else ens.mean,
               None if ens is None else ens.std,
               cell.z,
               None if cell.zscore is None else cell.zscore.empirical_p,
               cell.n_samples, cell.degenerate]


def grid_to_csv(grid: ScaleGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for row in grid_rows(grid):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _opt(s, conv):
    return None if s == "" else conv(s)


def grid_from_csv(text: str, threshold: float = 2.0) -> ScaleGrid:
    """Rebuild a (summary-only) grid from its CSV export."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != GRID_COLUMNS:
        raise InputError(f"unexpected grid CSV header: {reader.fieldnames}")
    cells = {}
    for row in reader:
        pair = ScalePair(int(row["geo_level"]), int(row["tech_level"]))
        degenerate = row["degenerate"] == "true"
        z = _opt(row["z"], float)
        p = _opt(row["p_emp"], float)
        t_emp = _opt(row["T_emp"], float)
        ens = None
        n = int(row["n_samples"])
        if n:
            ens = NullEnsemble(n, (), float(row["null_mean"]), float(row["null_std"]), 0, ())
        zs = None if p is None else ZScore(t_emp, z, p, z is None)
        cells[pair] = GridCell(pair, _opt(row["rows"], int), _opt(row["cols"], int),
                               _opt(row["fill"], float), t_emp, ens, zs, degenerate)
    if not cells:
        raise InputError("grid CSV has no cells")
    G = max(p.geo_level for p in cells)
    T = max(p.tech_level for p in cells)
    return ScaleGrid(cells, G, T, threshold)
