"""Rib placements, rib-count limits, the assembly search and the catalog.

A placement is the image of a canonical rib's cell set under a symmetry
that fixes the south-pole cell.  Such symmetries preserve every layer, so a
placed rib has the same projected shape as the canonical one.  An assembly
is a set of placements with pairwise disjoint cell sets.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path


from .cell120 import Complex120, PoleSymmetry, build_complex, pole_symmetries
from .strata import (
    LAYER_SIZES,
    RIB_SIZES,
    Layer,
    RibType,
    cell_layers,
    rib_cells,
    rings,
)

INNER = (RibType.Inner6, RibType.Inner4)
OUTER = (RibType.Outer6, RibType.Outer4)


class Infeasible(Exception):
    """No assembly exists for the requested rib multiset."""


@dataclass(frozen=True)
class Placement:
    rib_type: RibType
    symmetry: int  # index into the symmetry list used to build it
    cells: tuple[int, ...]  # sorted
    mirror: bool = False

    @property
    def mask(self) -> int:
        m = 0
        for c in self.cells:
            m |= 1 << c
        return m


class Board:
    """The complex, its rings, the pole symmetries and the canonical ribs.

    Building one is the expensive step (group, complex, symmetries); the
    solver and the mesh generator share it.
    """

    def __init__(self, complex_: Complex120 | None = None):
        self.complex = complex_ if complex_ is not None else build_complex()
        self.rings = rings(self.complex)
        self.symmetries: list[PoleSymmetry] = pole_symmetries(self.complex, include_reflections=True)
        self.layers = cell_layers(self.complex)
        self.ribs = {t: rib_cells(self.complex, self.rings, t) for t in RibType}
        self._placements: dict[tuple[RibType, bool], list[Placement]] = {}

    @property
    def rotations(self) -> list[PoleSymmetry]:
        return self.symmetries[:60]

    @cached_property
    def layer_masks(self) -> list[int]:
        masks = [0] * 9
        for c, L in enumerate(self.layers):
            masks[L] |= 1 << c
        return masks

    def base_cell_sets(self, rib_type) -> list[tuple[tuple[int, ...], bool]]:
        """Canonical cell sets of a rib type, with a flag for the mirrored hand.

        Cutting the equatorial ring in two gives two pieces that are mirror
        images of each other, so the equator rib comes in both hands.  The
        other ribs are achiral: their mirror images are rotated copies.
        """
        rib_type = RibType(rib_type)
        base = self.ribs[rib_type].cells
        out = [(base, False)]
        if rib_type is RibType.Equator5:
            ring = next(r for r in self.rings if r.name == "equator").cells
            out.append((tuple(c for c in ring if c not in base), True))
        return out

    def placements(self, rib_type, allow_mirror: bool = False) -> list[Placement]:
        """Distinct images of the rib under pole rotations (and reflections).

        Sorted by cell tuple, so indices are stable.
        """
        rib_type = RibType(rib_type)
        key = (rib_type, allow_mirror)
        if key not in self._placements:
            syms = self.symmetries if allow_mirror else self.rotations
            seen = {}
            for base, other_hand in self.base_cell_sets(rib_type):
                for k, s in enumerate(syms):
                    cells = s.apply_cells(base)
                    if cells not in seen:
                        mirror = other_hand != (s.kind == "reflection")
                        seen[cells] = Placement(rib_type, k, cells, mirror)
            self._placements[key] = sorted(seen.values(), key=lambda p: p.cells)
        return self._placements[key]

    def orbit_representatives(self, rib_type, allow_mirror: bool = False) -> list[int]:
        """Index of the first placement in each symmetry orbit."""
        opts = self.placements(rib_type, allow_mirror)
        syms = self.symmetries if allow_mirror else self.rotations
        index = {p.cells: k for k, p in enumerate(opts)}
        reps, covered = [], set()
        for k, p in enumerate(opts):
            if k in covered:
                continue
            reps.append(k)
            covered.update(index[s.apply_cells(p.cells)] for s in syms)
        return reps

    def layer_histogram(self, cells) -> tuple[int, ...]:
        h = [0] * 9
        for c in cells:
            h[self.layers[c]] += 1
        return tuple(h)

    def rib_histogram(self, rib_type) -> tuple[int, ...]:
        return self.layer_histogram(self.ribs[RibType(rib_type)].cells)


_DEFAULT_BOARD: Board | None = None


def default_board() -> Board:
    global _DEFAULT_BOARD
    if _DEFAULT_BOARD is None:
        _DEFAULT_BOARD = Board()
    return _DEFAULT_BOARD


@dataclass(frozen=True)
class PuzzleSpec:
    name: str
    ribs: dict  # RibType -> count
    expected_cells: int | None = None
    notes: tuple[str, ...] = ()
    variants: tuple["PuzzleSpec", ...] = field(default=(), compare=False)
    # required number of pole rotations preserving the assembled cell set;
    # separates puzzles that share a rib multiset
    symmetry_order: int | None = None

    def __post_init__(self):
        ribs = {RibType(k): int(v) for k, v in self.ribs.items() if int(v) > 0}
        object.__setattr__(self, "ribs", ribs)

    @property
    def total_cells(self) -> int:
        return sum(RIB_SIZES[t] * n for t, n in self.ribs.items())

    @property
    def numeral(self) -> int | None:
        m = re.match(r"Dc(\d+)", self.name.replace(" ", ""))
        return int(m.group(1)) if m else None

    def counts_consistent(self) -> bool:
        n = self.total_cells
        checks = [self.expected_cells in (None, n)]
        if self.numeral is not None:
            checks.append(self.numeral == n)
        return all(checks)

    def rib_list(self) -> list[RibType]:
        out = []
        for t in RibType:
            out.extend([t] * self.ribs.get(t, 0))
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ribs": {t.value: n for t, n in self.ribs.items()},
            "cells": self.total_cells,
            "notes": list(self.notes),
            "symmetry_order": self.symmetry_order,
        }


@dataclass(frozen=True)
class Assembly:
    placements: tuple[Placement, ...]

    @property
    def cells(self) -> frozenset[int]:
        return frozenset(c for p in self.placements for c in p.cells)

    def is_disjoint(self) -> bool:
        return sum(len(p.cells) for p in self.placements) == len(self.cells)

    def key(self) -> tuple:
        return tuple(sorted((p.rib_type.value, tuple(sorted(p.cells))) for p in self.placements))

    def to_json(self) -> list[dict]:
        return [{"rib": p.rib_type.value, "cells": list(p.cells)} for p in self.placements]


# Binding layer for each limit: (layer, cells per rib) per rib kind.
_LIMITS = (
    ("inner", INNER, Layer.Antarctic, 2),
    ("outer", OUTER, Layer.Capricorn, 2),
    ("inner+outer", INNER + OUTER, Layer.SouthTemperate, 2),
)


def check_rib_limits(spec: PuzzleSpec) -> dict:
    """Layer-capacity bounds on the numbers of inner and outer ribs."""
    report = {"passed": True, "violations": [], "limits": {}}
    for name, kinds, layer, per_rib in _LIMITS:
        used = sum(spec.ribs.get(t, 0) for t in kinds)
        cap = LAYER_SIZES[layer] // per_rib
        report["limits"][name] = {
            "count": used,
            "max": cap,
            "binding_layer": layer.label,
            "layer_capacity": LAYER_SIZES[layer],
            "cells_per_rib": per_rib,
        }
        if used > cap:
            report["passed"] = False
            report["violations"].append(
                f"{name}: {used} ribs need {used * per_rib} {layer.label} cells, "
                f"only {LAYER_SIZES[layer]} exist"
            )
    return report


def _popcount(x: int) -> int:
    return bin(x).count("1")


class _Search:
    """Backtracking over bitsets of used cells.

    Two kinds of branching step are used.  When some layer has exactly as
    many free cells as the remaining ribs need there, every one of those
    cells must be covered, so the search branches on the free cell with the
    fewest fitting placements.  Otherwise it branches on the next rib of the
    type with the fewest placements, taking placements of one type in
    increasing index order so each assembly is produced once.
    """

    def __init__(self, board: Board, spec: PuzzleSpec, allow_mirror: bool, fix_first: bool):
        self.board = board
        self.types = sorted(
            (t for t in spec.ribs if spec.ribs[t] > 0),
            key=lambda t: (len(board.placements(t, allow_mirror)), list(RibType).index(t)),
        )
        self.counts = [spec.ribs[t] for t in self.types]
        self.options = {t: board.placements(t, allow_mirror) for t in self.types}
        self.masks = [[p.mask for p in self.options[t]] for t in self.types]
        self.hist = [board.rib_histogram(t) for t in self.types]
        self.layer_masks = board.layer_masks
        # by_cell[ti][c] = indices of type-ti placements containing cell c
        n = len(board.complex.centers)
        self.by_cell = []
        for ms in self.masks:
            idx = [[] for _ in range(n)]
            for k, m in enumerate(ms):
                for c in range(n):
                    if m >> c & 1:
                        idx[c].append(k)
            self.by_cell.append(idx)
        self.first_choices = None
        if fix_first and self.types:
            self.first_choices = board.orbit_representatives(self.types[0], allow_mirror)

    def run(self, limit: int | None):
        out: list[list[tuple[RibType, int]]] = []
        chosen: list[tuple[int, int]] = []
        remaining = list(self.counts)
        bound = [-1] * len(self.types)
        ntypes = len(self.types)

        def full() -> bool:
            return limit is not None and len(out) >= limit

        def place(ti: int, k: int, used: int, b: int | None):
            chosen.append((ti, k))
            remaining[ti] -= 1
            old = bound[ti]
            if b is not None:
                bound[ti] = b
            rec(used | self.masks[ti][k], False)
            bound[ti] = old
            remaining[ti] += 1
            chosen.pop()

        def rec(used: int, root: bool):
            if full():
                return
            if not any(remaining):
                out.append(list(chosen))
                return
            tight = 0
            for L in range(9):
                need = sum(remaining[ti] * self.hist[ti][L] for ti in range(ntypes))
                free_mask = self.layer_masks[L] & ~used
                free = _popcount(free_mask)
                if need > free:
                    return
                if need and need == free:
                    tight |= free_mask
            if tight and not (root and self.first_choices is not None):
                best = None
                c = 0
                m = tight
                while m:
                    if m & 1:
                        cands = [
                            (ti, k)
                            for ti in range(ntypes) if remaining[ti]
                            for k in self.by_cell[ti][c]
                            if k > bound[ti] and not self.masks[ti][k] & used
                        ]
                        if best is None or len(cands) < len(best):
                            best = cands
                            if not cands:
                                return
                    m >>= 1
                    c += 1
                for ti, k in best:
                    place(ti, k, used, None)
                    if full():
                        return
                return
            ti = next(t for t in range(ntypes) if remaining[t])
            if root and self.first_choices is not None:
                # symmetry breaking: any assembly is equivalent to one using
                # an orbit representative, though not necessarily as its
                # lowest-index placement, so no ordering bound is imposed
                for k in self.first_choices:
                    place(ti, k, used, None)
                    if full():
                        return
                return
            ms = self.masks[ti]
            for k in range(bound[ti] + 1, len(ms)):
                if ms[k] & used:
                    continue
                place(ti, k, used, k)
                if full():
                    return

        rec(0, True)
        return [
            Assembly(tuple(self.options[self.types[ti]][k] for ti, k in sol)) for sol in out
        ]


def solve(
    spec: PuzzleSpec,
    board: Board | None = None,
    allow_mirror: bool = False,
    max_solutions: int | None = 1,
    break_symmetry: bool = True,
) -> list[Assembly]:
    """Search for assemblies of ``spec``'s ribs with disjoint cell sets.

    When ``spec.symmetry_order`` is set only assemblies whose cell set is
    preserved by exactly that many pole rotations are returned.
    With ``break_symmetry`` the first rib is restricted to one placement per
    symmetry orbit: every assembly is equivalent under a pole symmetry to
    one of those searched, so existence and infeasibility answers are
    unaffected.
    Raises :class:`Infeasible` when nothing is found.
    """
    board = board or default_board()
    search = _Search(board, spec, allow_mirror, fix_first=break_symmetry)
    if spec.symmetry_order is None:
        found = search.run(max_solutions)
    else:
        # the symmetry order is constant on orbits, so symmetry breaking
        # still reaches every class
        found = [
            a for a in search.run(None)
            if assembly_symmetry_order(a, board) == spec.symmetry_order
        ]
        if max_solutions is not None:
            found = found[:max_solutions]
    if not found:
        raise Infeasible(f"{spec.name}: no assembly exists")
    return found


def _canonical(assembly_key, perm) -> tuple:
    return tuple(sorted((t, tuple(sorted(int(perm[c]) for c in cells))) for t, cells in assembly_key))


def orbit_count(keys: list[tuple], syms: list[PoleSymmetry]) -> int:
    """Number of symmetry orbits met by ``keys``."""
    pending = set(keys)
    n = 0
    while pending:
        k = pending.pop()
        n += 1
        for s in syms:
            pending.discard(_canonical(k, s.cell_permutation))
    return n


def count_solutions(
    spec: PuzzleSpec, board: Board | None = None, allow_mirror: bool = False
) -> dict:
    """Raw number of assemblies and numbers of orbits under rotations and
    under rotations together with reflections."""
    board = board or default_board()
    found = _Search(board, spec, allow_mirror, fix_first=False).run(None)
    keys = sorted({a.key() for a in found})
    return {
        "raw": len(keys),
        "up_to_rotation": orbit_count(keys, board.rotations),
        "up_to_full_symmetry": orbit_count(keys, board.symmetries),
    }


def assembly_symmetry_order(assembly: Assembly, board: Board, include_reflections: bool = False) -> int:
    """Number of pole symmetries mapping the assembled cell set to itself."""
    cells = tuple(sorted(assembly.cells))
    syms = board.symmetries if include_reflections else board.rotations
    return sum(1 for s in syms if s.apply_cells(cells) == cells)


def _spec(name, notes=(), variants=(), symmetry_order=None, **ribs) -> PuzzleSpec:
    return PuzzleSpec(name, ribs, None, tuple(notes), tuple(variants), symmetry_order)


def _variant(base: str, label: str, **ribs) -> PuzzleSpec:
    # a variant is named after its own cell count: "Dc24 Star" with one
    # inner 6 is "Dc26 Star (1 x inner 6)"
    n = sum(RIB_SIZES[RibType(t)] * k for t, k in ribs.items())
    return _spec(f"Dc{n} {base} {label}", **ribs)


def catalog() -> list[PuzzleSpec]:
    """The twelve catalogued puzzles with their listed variants."""
    I4, I6, O4, O6, SP, EQ = "inner4", "inner6", "outer4", "outer6", "spine", "equator5"
    return [
        _spec(
            "Dc24 Star",
            ["Up to three ribs can be replaced by inner 6s."],
            [_variant("Star", f"({k} x inner 6)", **{I4: 6 - k, I6: k}) for k in (1, 2, 3)],
            symmetry_order=12,
            **{I4: 6},
        ),
        _spec(
            "Dc24 Pulsar",
            ["Any number of ribs can be replaced by inner 6s."],
            [_variant("Pulsar", f"({k} x inner 6)", **{I4: 6 - k, I6: k}) for k in range(1, 7)],
            symmetry_order=6,
            **{I4: 6},
        ),
        _spec(
            "Dc29 Space Invader",
            ["Can add 2 x equator."],
            [_variant("Space Invader", "+ 2 x equator", **{I6: 2, O6: 2, SP: 1, EQ: 2})],
            **{I6: 2, O6: 2, SP: 1},
        ),
        _spec("Dc30 Star", (), (), **{O4: 3, O6: 3}),
        _spec(
            "Dc30 Ring",
            ["Replace all ribs with inner 6s to get the Inner Ring."],
            [_spec("Dc30 Inner Ring", **{I6: 5})],
            **{O6: 5},
        ),
        _spec(
            "Dc30 Comet",
            ["Add a spine and one inner 4 to make the Comet more rigid."],
            [_variant("Comet", "+ spine + inner 4", **{O6: 5, SP: 1, I4: 1})],
            **{O6: 5},
        ),
        _spec(
            "Dc36 Alien",
            ["Either set of 6s can be replaced by 4s."],
            [
                _variant("Alien", "(inner 4s)", **{I4: 3, O6: 3}),
                _variant("Alien", "(outer 4s)", **{I6: 3, O4: 3}),
            ],
            **{I6: 3, O6: 3},
        ),
        _spec(
            "Dc36 Pulsar",
            ["Up to three ribs can be replaced by outer 4s."],
            [_variant("Pulsar", f"({k} x outer 4)", **{O6: 6 - k, O4: k}) for k in (1, 2, 3)],
            **{O6: 6},
        ),
        _spec("Dc42 Alien", (), (), **{O4: 6, I6: 3}),
        _spec("Dc45 Meteor", ["There are six ways to build this."], (), **{I4: 5, O4: 5, SP: 1}),
        _spec("Dc50 Galaxy", (), (), **{I4: 5, O4: 5, EQ: 2}),
        _spec("Dc75 Meteor", (), (), **{I6: 5, O6: 5, SP: 1, EQ: 2}),
    ]


def _norm_name(s: str) -> str:
    return re.sub(r"[^a-z0-9]", "", s.lower())


def find_spec(name: str) -> PuzzleSpec:
    """Look a puzzle up by name ("Dc45 Meteor", "Dc45Meteor", "dc45-meteor")."""
    key = _norm_name(name)
    pool = []
    for s in catalog():
        pool.append(s)
        pool.extend(s.variants)
    for s in pool:
        if s.name == name:
            return s
    for s in pool:
        if _norm_name(s.name) == key:
            return s
    raise KeyError(f"unknown puzzle {name!r}")


def parse_spec_text(text: str, default_name: str = "custom") -> PuzzleSpec:
    """Read a puzzle spec from JSON or from ``key=value`` lines.

    JSON: ``{"name": ..., "ribs": {"inner4": 5, ...}, "cells": N}``.
    key=value: ``name=...``, ``cells=N`` and one line per rib type.
    Both accept an optional ``symmetry_order``.
    """
    text = text.strip()
    if text.startswith("{"):
        data = json.loads(text)
        ribs = {RibType.parse(k): int(v) for k, v in data.get("ribs", {}).items()}
        return PuzzleSpec(
            data.get("name", default_name), ribs, data.get("cells"),
            symmetry_order=data.get("symmetry_order"),
        )
    name, cells, order, ribs = default_name, None, None, {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if k == "name":
            name = v
        elif k == "cells":
            cells = int(v)
        elif k == "symmetry_order":
            order = int(v)
        else:
            ribs[RibType.parse(k)] = int(v)
    return PuzzleSpec(name, ribs, cells, symmetry_order=order)


def load_spec(name_or_path: str) -> PuzzleSpec:
    try:
        return find_spec(name_or_path)
    except KeyError:
        path = Path(name_or_path)
        if path.exists():
            return parse_spec_text(path.read_text(encoding="utf-8"), path.stem)
        raise


def validate_assembly(assembly: Assembly, spec: PuzzleSpec, board: Board, allow_mirror: bool = False) -> list[str]:
    """Problems with an assembly; empty when it is sound."""
    problems = []
    if not assembly.is_disjoint():
        problems.append("placements overlap")
    got = Counter(p.rib_type for p in assembly.placements)
    if dict(got) != spec.ribs:
        problems.append(f"rib multiset {dict(got)} != {spec.ribs}")
    if len(assembly.cells) != spec.total_cells:
        problems.append("cell total mismatch")
    for p in assembly.placements:
        legal = {q.cells for q in board.placements(p.rib_type, allow_mirror)}
        if p.cells not in legal:
            problems.append(f"{p.rib_type.value} placement {p.cells} is not a legal image")
    h = board.layer_histogram(assembly.cells)
    for L in range(9):
        if h[L] > LAYER_SIZES[L]:
            problems.append(f"layer {Layer(L).label} over capacity")
    return problems


def max_upgrades(assembly: Assembly, board: Board, short=RibType.Inner4, long=RibType.Inner6) -> int:
    """Most ``short`` ribs of an assembly that can be lengthened to ``long``
    ribs at the same time without collisions."""
    short, long = RibType(short), RibType(long)
    taken = assembly.cells
    options = []
    for p in assembly.placements:
        if p.rib_type is not short:
            continue
        ext = [
            frozenset(q.cells) - frozenset(p.cells)
            for q in board.placements(long)
            if set(p.cells) <= set(q.cells)
        ]
        options.append([e for e in ext if not e & taken])
    best = 0

    def rec(i: int, used: frozenset, n: int):
        nonlocal best
        if n + len(options) - i <= best:
            return
        if i == len(options):
            best = n
            return
        for e in options[i]:
            if not e & used:
                rec(i + 1, used | e, n + 1)
        rec(i + 1, used, n)

    rec(0, frozenset(), 0)
    return best
