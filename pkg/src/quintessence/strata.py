"""Layers of cells by distance from the south pole, rings and ribs.

Rings are the twelve right cosets of the cyclic group generated by the
face-rotation lift ``q``.  Ribs are their southern halves.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import quat as Q
from .cell120 import Complex120


class RingPartitionFailure(RuntimeError):
    pass


class Layer(enum.IntEnum):
    SouthPole = 0
    Antarctic = 1
    SouthTemperate = 2
    Capricorn = 3
    Equatorial = 4
    Cancer = 5
    NorthTemperate = 6
    Arctic = 7
    NorthPole = 8

    @property
    def angle(self) -> float:
        return _ANGLES[self.value]

    @property
    def label(self) -> str:
        return _LABELS[self.value]


_ANGLES = tuple(k * math.pi for k in (0, 1 / 5, 1 / 3, 2 / 5, 1 / 2, 3 / 5, 2 / 3, 4 / 5, 1))
_LABELS = (
    "south pole",
    "antarctic sphere",
    "southern temperate",
    "tropic of Capricorn",
    "equatorial sphere",
    "tropic of Cancer",
    "northern temperate",
    "arctic sphere",
    "north pole",
)
LAYER_SIZES = (1, 12, 20, 12, 30, 12, 20, 12, 1)


def layer_of(g, eps: float = Q.EPS_ALG) -> Layer:
    re = float(np.asarray(g)[0])
    hits = [L for L in Layer if abs(re - math.cos(L.angle)) <= eps]
    if len(hits) != 1:
        raise ValueError(f"real part {re!r} matches no layer")
    return hits[0]


def cell_layers(complex_: Complex120) -> np.ndarray:
    return np.array([layer_of(g) for g in complex_.centers], dtype=int)


class RingName(str, enum.Enum):
    Spine = "spine"
    Equator = "equator"
    Inner = "inner"
    Outer = "outer"


@dataclass(frozen=True)
class Ring:
    kind: RingName
    index: int  # 0..4 for inner/outer, 0 otherwise
    cells: tuple[int, ...]  # cells[k] = q^k * cells[0]

    @property
    def name(self) -> str:
        if self.kind in (RingName.Inner, RingName.Outer):
            return f"{self.kind.value}{self.index}"
        return self.kind.value


def _coset(complex_: Complex120, rep: int) -> tuple[int, ...]:
    mt = complex_.group.mul_table
    q = complex_.group.named["q"]
    out = [rep]
    for _ in range(9):
        out.append(int(mt[q, out[-1]]))
    return tuple(out)


def _twist(complex_: Complex120, g: int, cells) -> tuple[int, ...]:
    mt, inv = complex_.group.mul_table, complex_.group.inv_table
    return tuple(int(mt[mt[g, c], inv[g]]) for c in cells)


def rings(complex_: Complex120) -> list[Ring]:
    """Spine, equator, inner rings 0-4 and outer rings 0-4, in that order."""
    grp = complex_.group
    mt, inv = grp.mul_table, grp.inv_table
    q, qp = grp.named["q"], grp.named["q_prime"]

    spine = Ring(RingName.Spine, 0, _coset(complex_, 0))

    f = Q.imag(Q.log_unit(grp.elements[q]).axis)
    flips = [
        g for g in range(len(grp))
        if np.allclose(Q.twisted_action(grp.elements[g], f), -f, atol=1e-9)
    ]
    if len(flips) != 10:
        raise RingPartitionFailure(f"{len(flips)} elements reverse the spine axis")
    equator = Ring(RingName.Equator, 0, _coset(complex_, min(flips)))

    inner = []
    rep = qp
    for i in range(5):
        inner.append(Ring(RingName.Inner, i, _coset(complex_, rep)))
        rep = int(mt[rep, inv[q]])

    used = set(spine.cells) | set(equator.cells)
    for r in inner:
        used |= set(r.cells)
    rest = [c for c in range(len(grp)) if c not in used]
    if len(rest) != 50:
        raise RingPartitionFailure(f"{len(rest)} cells left for outer rings, expected 50")
    outer = [Ring(RingName.Outer, 0, _coset(complex_, min(rest)))]
    for i in range(1, 5):
        outer.append(Ring(RingName.Outer, i, _twist(complex_, q, outer[-1].cells)))

    out = [spine, equator] + inner + outer
    cover = Counter(c for r in out for c in r.cells)
    if len(cover) != len(grp) or set(cover.values()) != {1}:
        raise RingPartitionFailure("rings do not partition the cells")
    return out


def ring_by_name(ring_list: list[Ring], name: str) -> Ring:
    for r in ring_list:
        if r.name == name:
            return r
    raise KeyError(name)


TABLE_COLUMNS = ("number of cells", "spine", "equator", "remaining", "inner", "outer")


def ring_layer_table(complex_: Complex120, ring_list: list[Ring]) -> np.ndarray:
    """9 x 5 counts: (spine, equator, remaining, inner, outer) per layer.

    The inner and outer columns are per ring; a ValueError is raised when
    the five rings of a kind disagree.
    """
    layers = cell_layers(complex_)

    def hist(cells):
        h = np.zeros(9, dtype=int)
        for c in cells:
            h[layers[c]] += 1
        return h

    spine = hist(ring_by_name(ring_list, "spine").cells)
    eq = hist(ring_by_name(ring_list, "equator").cells)
    remaining = np.array(LAYER_SIZES) - spine - eq
    cols = [spine, eq, remaining]
    for kind in (RingName.Inner, RingName.Outer):
        hs = [hist(r.cells) for r in ring_list if r.kind == kind]
        if any(not np.array_equal(h, hs[0]) for h in hs):
            raise ValueError(f"{kind.value} rings meet the layers differently")
        cols.append(hs[0])
    return np.stack(cols, axis=1)


def hopf_check(complex_: Complex120, ring_list: list[Ring]) -> dict:
    """Each ring's centres span a 2-plane and are spaced pi/5 along its circle."""
    report = {}
    for r in ring_list:
        X = complex_.centers[list(r.cells)]
        s = np.linalg.svd(X, compute_uv=False)
        ratio = float(s[2] / s[0])
        steps = Q.dist_s3(X, np.roll(X, -1, axis=0))
        report[r.name] = {
            "rank": int(np.sum(s > 1e-9 * s[0])),
            "sigma_ratio": ratio,
            "max_step_error": float(np.max(np.abs(steps - math.pi / 5))),
            "passed": bool(ratio < 1e-9 and np.max(np.abs(steps - math.pi / 5)) < 1e-9),
        }
    return report


class RibType(str, enum.Enum):
    Spine = "spine"
    Inner6 = "inner6"
    Inner4 = "inner4"
    Outer6 = "outer6"
    Outer4 = "outer4"
    Equator5 = "equator5"

    @classmethod
    def parse(cls, text: str) -> "RibType":
        key = text.strip().lower().replace(" ", "").replace("_", "")
        aliases = {"equator": "equator5", "eq": "equator5"}
        key = aliases.get(key, key)
        return cls(key)


RIB_SIZES = {
    RibType.Spine: 5,
    RibType.Inner6: 6,
    RibType.Inner4: 4,
    RibType.Outer6: 6,
    RibType.Outer4: 4,
    RibType.Equator5: 5,
}

_SOURCE = {
    RibType.Spine: "spine",
    RibType.Inner6: "inner0",
    RibType.Inner4: "inner0",
    RibType.Outer6: "outer0",
    RibType.Outer4: "outer0",
    RibType.Equator5: "equator",
}


@dataclass(frozen=True)
class Rib:
    rib_type: RibType
    cells: tuple[int, ...]  # consecutive cells are face-adjacent
    source: str


def _southern_arc(complex_: Complex120, cycle, eps: float) -> list[int]:
    re = complex_.centers[list(cycle), 0]
    keep = re >= -eps
    n = len(cycle)
    starts = [k for k in range(n) if keep[k] and not keep[k - 1]]
    if len(starts) != 1:
        raise ValueError("southern cells of a ring are not a single arc")
    k0 = starts[0]
    arc = []
    k = k0
    while keep[k % n] and len(arc) < n:
        arc.append(cycle[k % n])
        k += 1
    return arc


def rib_cells(complex_: Complex120, ring_list: list[Ring], rib_type, eps: float = Q.EPS_ALG) -> Rib:
    rib_type = RibType(rib_type)
    source = _SOURCE[rib_type]
    cycle = ring_by_name(ring_list, source).cells
    if rib_type is RibType.Equator5:
        k0 = cycle.index(min(cycle))
        cells = [cycle[(k0 + k) % 10] for k in range(5)]
    else:
        cells = _southern_arc(complex_, cycle, eps)
        if rib_type in (RibType.Inner4, RibType.Outer4):
            cells = [c for c in cells if abs(complex_.centers[c, 0]) > eps]
    if len(cells) != RIB_SIZES[rib_type]:
        raise ValueError(f"{rib_type.value}: got {len(cells)} cells")
    return Rib(rib_type, tuple(cells), source)


def layer_histogram(complex_: Complex120, cells) -> dict[Layer, int]:
    layers = cell_layers(complex_)
    return dict(Counter(Layer(int(layers[c])) for c in cells))
