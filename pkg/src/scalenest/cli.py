"""``scalenest`` command line: synth, grid, temperature, render.

Exit status: 0 success, 2 unreadable or invalid input, 3 configuration
error, 4 degenerate input (nothing left to analyse).
"""
from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import __version__
from .binarize import RcaConfig, binarize, prune_empty
from .config import ConfigError, RunConfig, load_config
from .errors import DegenerateInputError, InputError, ScalenestError
from .export import (binary_map_from_csv, binary_map_to_csv, ensemble_to_csv,
                     temperature_to_csv)
from .grid import GridConfig, compute_grid, extract_frontier, grid_from_csv, grid_to_csv
from .ingest import (IngestConfig, IngestStats, InvalidRecordPolicy, aggregate_map,
                     build_finest_map, infer_depths, parse_patents, prepare_records,
                     read_rewrite_table, write_records)
from .model import ScalePair
from .rank import rank_and_pack
from .svg import render_heatmap, render_portrait
from .synth import Regime, SynthSpec, gen_records
from .temperature import measure_temperature, solve_isocline

log = logging.getLogger("scalenest")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_DEGENERATE = 0, 2, 3, 4


class InputUnreadable(ScalenestError):
    pass


def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputUnreadable(f"cannot read {path}: {getattr(exc, 'strerror', None) or exc}") from None


class _Staging:
    """Write outputs under a temporary directory, move them into place on success."""

    def __init__(self, target: Path):
        self.target = Path(target)
        parent = self.target.parent if str(self.target.parent) else Path(".")
        parent.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".scalenest-", dir=parent))

    def path(self, name: str) -> Path:
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def commit_dir(self) -> None:
        if not self.target.exists():
            os.replace(self.dir, self.target)
            return
        for item in sorted(self.dir.iterdir()):
            dest = self.target / item.name
            if dest.is_dir() and not item.is_file():
                shutil.rmtree(dest)
            os.replace(item, dest)
        shutil.rmtree(self.dir, ignore_errors=True)

    def commit_file(self, name: str) -> None:
        os.replace(self.dir / name, self.target)
        shutil.rmtree(self.dir, ignore_errors=True)

    def abort(self) -> None:
        shutil.rmtree(self.dir, ignore_errors=True)


def _load_records(cfg: RunConfig):
    if cfg.input is None:
        raise ConfigError("--input is required")
    rewrite = None
    if cfg.rewrite_table is not None:
        rewrite = read_rewrite_table(_read_text(cfg.rewrite_table).splitlines())
    text = _read_text(cfg.input)
    records = parse_patents(text.splitlines(), rewrite=rewrite)
    if not records:
        raise InputError(f"{cfg.input} holds no records")
    return records


def _ingest_config(cfg: RunConfig, records) -> IngestConfig:
    geo, tech = cfg.geo_levels, cfg.tech_levels
    if geo is None or tech is None:
        g0, t0 = infer_depths(records)
        geo = g0 if geo is None else geo
        tech = t0 if tech is None else tech
    policy = InvalidRecordPolicy.SKIP if cfg.skip_invalid else InvalidRecordPolicy.REJECT
    try:
        return IngestConfig(geo, tech, cfg.date_window, policy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _manifest(cfg: RunConfig, icfg: IngestConfig, stats: IngestStats, grid) -> str:
    frontier = extract_frontier(grid)
    lines = [f"scalenest_version = {__version__}",
             f"input = {cfg.input.name}",
             *stats.manifest_lines(),
             f"geo_levels = {icfg.finest_geo_level}",
             f"tech_levels = {icfg.finest_tech_level}",
             f"date_window = {'none' if icfg.date_window is None else '%s..%s' % icfg.date_window}",
             f"invalid_record_policy = {icfg.invalid_record_policy.value}",
             f"rca_threshold = {cfg.threshold!r}",
             f"samples = {cfg.samples}",
             f"seed = {cfg.seed}",
             f"sigma = {cfg.sigma!r}",
             f"transpose = {str(cfg.transpose).lower()}",
             f"max_iter = {cfg.max_iter}",
             f"tol = {cfg.tol!r}"]
    redraws = sum(c.ensemble.degenerate_redraws for c in grid.ordered() if c.ensemble)
    lines.append(f"degenerate_redraws = {redraws}")
    for name, cells in (("nested_cells", frontier.nested_cells),
                        ("antinested_cells", frontier.antinested_cells),
                        ("insignificant_cells", frontier.insignificant_cells),
                        ("degenerate_cells", frontier.degenerate_cells)):
        lines.append(f"{name} = " + " ".join(f"{p.geo_level}x{p.tech_level}" for p in sorted(cells)))
    for cell in grid.ordered():
        if cell.degenerate and cell.reason:
            lines.append(f"degenerate[{cell.pair.geo_level}x{cell.pair.tech_level}] = {cell.reason}")
    return "\n".join(lines) + "\n"


def cmd_grid(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise ConfigError("--out is required")
    records = _load_records(cfg)
    icfg = _ingest_config(cfg, records)
    stats = IngestStats()
    records = prepare_records(records, icfg, stats)
    gcfg = GridConfig(icfg, RcaConfig(cfg.threshold), cfg.samples, cfg.seed, cfg.sigma,
                      cfg.max_iter, cfg.tol, cfg.transpose)
    grid = compute_grid(records, gcfg)
    if all(c.degenerate and c.t_emp is None for c in grid.ordered()):
        raise DegenerateInputError("every scale pair is degenerate")
    stage = _Staging(cfg.out)
    try:
        stage.write("grid.csv", grid_to_csv(grid))
        for cell in grid.ordered():
            tag = f"g{cell.pair.geo_level}_t{cell.pair.tech_level}"
            if cell.ensemble is not None:
                stage.write(f"ensembles/{tag}.csv", ensemble_to_csv(cell.ensemble))
            if cell.packed is not None:
                stage.write(f"maps/{tag}.csv", binary_map_to_csv(cell.packed))
        stage.write("manifest.txt", _manifest(cfg, icfg, stats, grid))
        if cfg.svg:
            stage.write("grid.svg", render_heatmap(grid))
            for cell in grid.ordered():
                if cell.packed is not None:
                    tag = f"g{cell.pair.geo_level}_t{cell.pair.tech_level}"
                    stage.write(f"portraits/{tag}.svg",
                                render_portrait(cell.packed, solve_isocline(cell.fill)))
        if cfg.figures:
            from .plotting import save_grid_figure, save_portrait_figure
            save_grid_figure(grid, stage.path("figures/grid.png"))
            for cell in grid.ordered():
                if cell.packed is not None:
                    tag = f"g{cell.pair.geo_level}_t{cell.pair.tech_level}"
                    save_portrait_figure(cell.packed, solve_isocline(cell.fill),
                                         stage.path(f"figures/{tag}.png"),
                                         title=f"geo {cell.pair.geo_level}, tech {cell.pair.tech_level}")
    except BaseException:
        stage.abort()
        raise
    stage.commit_dir()
    for cell in grid.ordered():
        z = "degenerate" if cell.z is None else f"{cell.z:+.2f}"
        print(f"geo {cell.pair.geo_level} tech {cell.pair.tech_level}: z = {z}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise ConfigError("--out is required")
    try:
        spec = SynthSpec(cfg.parents, cfg.children, cfg.tech_parents, cfg.tech_children,
                         cfg.records_per_child, cfg.regime, cfg.seed, cfg.noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    records = gen_records(spec)
    stage = _Staging(cfg.out)
    try:
        with open(stage.path("records.jsonl"), "w", encoding="utf-8", newline="") as fh:
            write_records(records, fh)
    except BaseException:
        stage.abort()
        raise
    stage.commit_file("records.jsonl")
    print(f"wrote {len(records)} records to {cfg.out}")
    return EXIT_OK


def _map_from_args(args, cfg: RunConfig):
    if args.map is not None:
        return prune_empty(binary_map_from_csv(_read_text(args.map)))[0]
    records = _load_records(cfg)
    icfg = _ingest_config(cfg, records)
    records = prepare_records(records, icfg)
    finest = build_finest_map(records, icfg)
    pair = ScalePair(args.geo_level or icfg.finest_geo_level,
                     args.tech_level or icfg.finest_tech_level)
    return prune_empty(binarize(aggregate_map(finest, pair), RcaConfig(cfg.threshold)))[0]


def cmd_temperature(args, cfg: RunConfig) -> int:
    bmap = _map_from_args(args, cfg)
    packed = bmap if args.no_pack else rank_and_pack(bmap, cfg.max_iter, cfg.tol)[0]
    report = measure_temperature(packed)
    if cfg.out is not None:
        stage = _Staging(cfg.out)
        stage.write("report.csv", temperature_to_csv(report, packed))
        stage.commit_file("report.csv")
    m, n = report.matrix_shape
    print(f"T = {report.T:.6f}  fill = {report.fill:.6f}  p = {report.p:.6f}  shape = {m}x{n}  "
          f"unexpected cells = {len(report.unexpected_cells)}")
    return EXIT_OK


def cmd_render(args, cfg: RunConfig) -> int:
    if cfg.out is None:
        raise ConfigError("--out is required")
    png = cfg.out.suffix.lower() == ".png"
    stage = _Staging(cfg.out)
    name = "render.png" if png else "render.svg"
    try:
        if args.grid is not None:
            grid = grid_from_csv(_read_text(args.grid), cfg.sigma)
            if png:
                from .plotting import save_grid_figure
                save_grid_figure(grid, stage.path(name))
            else:
                stage.write(name, render_heatmap(grid))
        elif args.map is not None:
            bmap = prune_empty(binary_map_from_csv(_read_text(args.map)))[0]
            packed = bmap if args.no_pack else rank_and_pack(bmap, cfg.max_iter, cfg.tol)[0]
            iso = solve_isocline(packed.fill)
            if png:
                from .plotting import save_portrait_figure
                save_portrait_figure(packed, iso, stage.path(name))
            else:
                stage.write(name, render_portrait(packed, iso))
        else:
            raise ConfigError("render needs --grid or --map")
    except BaseException:
        stage.abort()
        raise
    stage.commit_file(name)
    return EXIT_OK


def _date_arg(s):
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scalenest",
                                description="Multiscale nestedness of innovation maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="key = value run configuration file")
        sp.add_argument("--out", type=Path)
        sp.add_argument("--seed", type=int)

    def records_opts(sp):
        sp.add_argument("--input", type=Path, help="line-delimited JSON records")
        sp.add_argument("--geo-levels", type=int, dest="geo_levels")
        sp.add_argument("--tech-levels", type=int, dest="tech_levels")
        sp.add_argument("--threshold", type=float, help="RCA threshold (default 1.0)")
        sp.add_argument("--date-from", type=_date_arg, dest="date_from")
        sp.add_argument("--date-to", type=_date_arg, dest="date_to")
        sp.add_argument("--skip-invalid", action="store_const", const=True, dest="skip_invalid")
        sp.add_argument("--rewrite-table", type=Path, dest="rewrite_table")
        sp.add_argument("--max-iter", type=int, dest="max_iter")
        sp.add_argument("--tol", type=float)

    g = sub.add_parser("grid", help="significance grid over all scale pairs")
    common(g)
    records_opts(g)
    g.add_argument("--samples", type=int, help="null ensemble size (default 1000)")
    g.add_argument("--sigma", type=float, help="significance threshold in sigma (default 2)")
    g.add_argument("--transpose", action="store_const", const=True,
                   help="shuffle within technology blocks instead of geographic ones")
    g.add_argument("--svg", action="store_const", const=True, help="write grid.svg and portraits")
    g.add_argument("--figures", action="store_const", const=True, help="write PNG figures")

    s = sub.add_parser("synth", help="generate records with planted structure")
    common(s)
    s.add_argument("--regime", type=Regime, choices=list(Regime), metavar="{inherited,disjoint,mixed}")
    s.add_argument("--parents", type=int)
    s.add_argument("--children", type=int)
    s.add_argument("--tech-parents", type=int, dest="tech_parents")
    s.add_argument("--tech-children", type=int, dest="tech_children")
    s.add_argument("--records-per-child", type=int, dest="records_per_child")
    s.add_argument("--noise", type=float)

    t = sub.add_parser("temperature", help="temperature of one map")
    common(t)
    records_opts(t)
    t.add_argument("--map", type=Path, help="binary map CSV (instead of --input)")
    t.add_argument("--geo-level", type=int, dest="geo_level")
    t.add_argument("--tech-level", type=int, dest="tech_level")
    t.add_argument("--no-pack", action="store_true", dest="no_pack",
                   help="measure the map in its given order")

    r = sub.add_parser("render", help="render a grid CSV or a map CSV")
    common(r)
    r.add_argument("--grid", type=Path)
    r.add_argument("--map", type=Path)
    r.add_argument("--sigma", type=float)
    r.add_argument("--no-pack", action="store_true", dest="no_pack")
    r.add_argument("--max-iter", type=int, dest="max_iter")
    r.add_argument("--tol", type=float)
    return p


_NOT_CONFIG = {"command", "verbose", "config", "map", "grid", "geo_level", "tech_level", "no_pack"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "grid":
            return cmd_grid(cfg)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "temperature":
            return cmd_temperature(args, cfg)
        return cmd_render(args, cfg)
    except ConfigError as exc:
        print(f"scalenest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateInputError as exc:
        print(f"scalenest: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputUnreadable, InputError) as exc:
        print(f"scalenest: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ScalenestError as exc:
        print(f"scalenest: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
