"""Synthetic data with planted multiscale structure.

Geography is two levels deep (parents ``P00``.. with children ``P00.C00``..),
technology likewise (sections ``S00``.. with fine codes ``S00.G00``..).
Fine codes carry a global rarity order that interleaves the sections, so a
prefix of that order touches every section evenly.

Regimes
-------
inherited
    Parents get menus (prefixes of the rarity order) of staircase-decreasing
    breadth; each child draws from a prefix of its parent's menu, the
    children's prefixes themselves forming a staircase.  Fine maps come out
    more nested than the block shuffle predicts.
disjoint
    Each parent's menu is dealt to its children in snake order (0, 1, .., J-1,
    J-1, .., 0, 0, ..), so siblings never share a code and get equally
    common slices.  Fine maps come out less nested than predicted.
mixed
    Children inherit nested prefixes at the fine level, but half of each
    child's output lands in a single home section, distinct among siblings.
    Fine-technology maps are nested, coarse-technology maps anti-nested.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFillError
from .model import PatentRecord, ScalePair, binary_map_from_array
from .temperature import FILL_MAX, FILL_MIN, temperature_of


class Regime(enum.Enum):
    INHERITED = "inherited"
    DISJOINT = "disjoint"
    MIXED = "mixed"


@dataclass(frozen=True)
class SynthSpec:
    n_parents: int = 4
    children_per_parent: int = 6
    n_tech_parents: int = 4
    tech_children_per_parent: int = 6
    records_per_child: int = 100
    regime: Regime = Regime.MIXED
    seed: int = 0
    noise: float = 0.0
    home_share: float = 0.5
    multi_tech_prob: float = 0.25

    def __post_init__(self):
        for name in ("n_parents", "children_per_parent", "n_tech_parents",
                     "tech_children_per_parent", "records_per_child"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        if not 0 <= self.noise < 1:
            raise ValueError("noise must lie in [0, 1)")
        if not 0 <= self.home_share < 1:
            raise ValueError("home_share must lie in [0, 1)")
        if not 0 <= self.multi_tech_prob <= 1:
            raise ValueError("multi_tech_prob must lie in [0, 1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def n_fine_techs(self) -> int:
        return self.n_tech_parents * self.tech_children_per_parent


def geo_code(parent: int, child: int) -> str:
    return f"P{parent:02d}.C{child:02d}"


def tech_code(rank: int, n_sections: int) -> str:
    """Fine code at position ``rank`` of the interleaved rarity order."""
    s, g = rank % n_sections, rank // n_sections
    return f"S{s:02d}.G{g:02d}"


def parent_breadth(spec: SynthSpec, parent: int) -> int:
    Q = spec.n_fine_techs
    return max(spec.children_per_parent, Q - parent * (Q // (spec.n_parents + 1)))


def child_menu(spec: SynthSpec, parent: int, child: int) -> np.ndarray:
    """Rarity ranks a child draws from (noise aside), with their probabilities."""
    Q, J, K = spec.n_fine_techs, spec.children_per_parent, spec.n_tech_parents
    B = parent_breadth(spec, parent)
    probs = np.zeros(Q)
    if spec.regime is Regime.DISJOINT:
        r = np.arange(B)
        owner = np.where((r // J) % 2 == 0, r % J, J - 1 - r % J)
        probs[:B][owner == child] = 1.0
    else:
        w = max(2, round(B * (J - child) / J))
        probs[:w] = 1.0
        if spec.regime is Regime.MIXED:
            probs /= probs.sum()
            home = (parent + child) % K
            ranks = np.arange(Q)
            hb = ((ranks % K) == home) & (ranks < max(w, K))
            probs = (1 - spec.home_share) * probs + spec.home_share * hb / hb.sum()
    return probs / probs.sum()


def gen_records(spec: SynthSpec) -> list[PatentRecord]:
    """Deterministic record list for ``spec`` (one geo code per record)."""
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed)))
    Q, K = spec.n_fine_techs, spec.n_tech_parents
    records = []
    for i in range(spec.n_parents):
        for j in range(spec.children_per_parent):
            probs = child_menu(spec, i, j)
            uniform = np.full(Q, 1.0 / Q)
            for r in range(spec.records_per_child):
                p = uniform if rng.random() < spec.noise else probs
                n_tech = 2 if rng.random() < spec.multi_tech_prob else 1
                n_tech = min(n_tech, int((p > 0).sum()))
                ranks = rng.choice(Q, size=n_tech, replace=False, p=p)
                records.append(PatentRecord.from_strings(
                    f"{geo_code(i, j)}-{r:04d}", [geo_code(i, j)],
                    [tech_code(int(q), K) for q in sorted(ranks)]))
    return records


def _critical_p(x, y):
    """Exponent at which ``x**p + y**p == 1`` for each center (vectorized)."""
    lo = np.full(x.shape, -40.0)
    hi = np.full(x.shape, 40.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p = np.exp(mid)
        inside = x ** p + y ** p <= 1.0
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return np.exp(hi)


def gen_nested(m: int, n: int, fill: float, seed: int = 0):
    """Perfectly nested staircase matching the fill-matched isocline.

    Cells enter the staircase in the order in which a growing isocline
    reaches their centers.  Because a discrete matrix can only hit some
    fills, the number of ones is the one closest to ``fill * m * n`` whose
    own isocline puts every presence inside and every absence outside
    (T == 0).  ``seed`` breaks ties between cells reached simultaneously.
    """
    if m < 2 or n < 2:
        raise ValueError("gen_nested needs m, n >= 2")
    if not (FILL_MIN <= fill <= FILL_MAX):
        raise DegenerateFillError(f"fill {fill} outside [{FILL_MIN}, {FILL_MAX}]")
    x = np.broadcast_to(((np.arange(n) + 0.5) / n)[None, :], (m, n)).ravel()
    y = np.broadcast_to(((np.arange(m) + 0.5) / m)[:, None], (m, n)).ravel()
    pc = _critical_p(x, y)
    tiebreak = np.random.default_rng(np.random.SeedSequence(int(seed))).permutation(m * n)
    order = np.lexsort((tiebreak, pc))
    N = m * n
    k_min = max(1, math.ceil(FILL_MIN * N))
    k_max = min(N - 1, math.floor(FILL_MAX * N))
    k0 = min(max(round(fill * N), k_min), k_max)
    for delta in range(N):
        for k in (k0 + delta, k0 - delta) if delta else (k0,):
            if not k_min <= k <= k_max:
                continue
            flat = np.zeros(N, np.uint8)
            flat[order[:k]] = 1
            bits = flat.reshape(m, n)
            if temperature_of(bits) == 0.0:
                return binary_map_from_array(bits, ScalePair(1, 1))
    raise DegenerateFillError(f"no self-consistent staircase for {m}x{n} near fill {fill}")
