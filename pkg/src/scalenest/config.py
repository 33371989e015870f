"""Run configuration: a ``key = value`` file merged with command-line flags."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ScalenestError
from .synth import Regime


class ConfigError(ScalenestError, ValueError):
    pass


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _date(s):
    return dt.date.fromisoformat(str(s).strip())


@dataclass(frozen=True)
class RunConfig:
    input: Path | None = None
    out: Path | None = None
    geo_levels: int | None = None
    tech_levels: int | None = None
    threshold: float = 1.0
    samples: int = 1000
    seed: int = 0
    sigma: float = 2.0
    date_from: dt.date | None = None
    date_to: dt.date | None = None
    skip_invalid: bool = False
    transpose: bool = False
    svg: bool = False
    figures: bool = False
    rewrite_table: Path | None = None
    max_iter: int = 1000
    tol: float = 1e-8
    # synth
    regime: Regime = Regime.MIXED
    parents: int = 4
    children: int = 6
    tech_parents: int = 4
    tech_children: int = 6
    records_per_child: int = 100
    noise: float = 0.0

    def validate(self) -> "RunConfig":
        problems = []
        if self.threshold <= 0:
            problems.append("threshold must be > 0")
        if self.samples < 2:
            problems.append("samples must be >= 2")
        if self.sigma <= 0:
            problems.append("sigma must be > 0")
        if not 0 <= self.seed < 2 ** 64:
            problems.append("seed must be a 64-bit unsigned integer")
        for name in ("geo_levels", "tech_levels"):
            v = getattr(self, name)
            if v is not None and v < 1:
                problems.append(f"{name} must be >= 1")
        if (self.date_from is None) != (self.date_to is None):
            problems.append("date_from and date_to must be given together")
        elif self.date_from is not None and self.date_from > self.date_to:
            problems.append("date_from is after date_to")
        if self.max_iter < 1 or self.tol <= 0:
            problems.append("max_iter must be >= 1 and tol > 0")
        for name in ("parents", "children", "tech_parents", "tech_children", "records_per_child"):
            if getattr(self, name) < 2:
                problems.append(f"{name} must be >= 2")
        if not 0 <= self.noise < 1:
            problems.append("noise must lie in [0, 1)")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @property
    def date_window(self):
        if self.date_from is None:
            return None
        return (self.date_from, self.date_to)


_CONVERTERS = {
    "input": Path, "out": Path, "rewrite_table": Path,
    "geo_levels": int, "tech_levels": int, "samples": int, "seed": int,
    "max_iter": int, "parents": int, "children": int, "tech_parents": int,
    "tech_children": int, "records_per_child": int,
    "threshold": float, "sigma": float, "tol": float, "noise": float,
    "date_from": _date, "date_to": _date,
    "skip_invalid": _bool, "transpose": _bool, "svg": _bool, "figures": _bool,
    "regime": Regime,
}
KEYS = frozenset(f.name for f in fields(RunConfig))


def convert(key: str, raw):
    if key not in KEYS:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return _CONVERTERS[key](raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = convert(key, raw)
    return values


def load_config(path: Path | None, overrides: dict) -> RunConfig:
    """File values first, then every flag that was actually given."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(parse_config_text(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(RunConfig(), **values).validate()
