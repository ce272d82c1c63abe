import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quintessence.puzzle import (
    Assembly,
    Infeasible,
    PuzzleSpec,
    assembly_symmetry_order,
    catalog,
    check_rib_limits,
    count_solutions,
    find_spec,
    load_spec,
    max_upgrades,
    orbit_count,
    parse_spec_text,
    solve,
    validate_assembly,
)
from quintessence.strata import LAYER_SIZES, Layer, RibType

# frozen from exhaustive orbit enumeration
PLACEMENTS = {
    RibType.Spine: (6, 6),
    RibType.Inner6: (30, 30),
    RibType.Inner4: (30, 30),
    RibType.Outer6: (30, 30),
    RibType.Outer4: (30, 30),
    RibType.Equator5: (60, 60),
}

# frozen from full enumeration: (raw, up to rotation, up to rotation and reflection)
COUNTS = {
    "Dc24 Star": (25, 3, 2),
    "Dc30 Ring": (192, 6, 3),
    "Dc36 Pulsar": (20, 2, 1),
    "Dc45 Meteor": (84, 6, 3),
    "Dc75 Meteor": (420, 10, 5),
}

# canonical 6 x inner 4 assemblies, one per rotation class
DC24_CLASSES = {
    "star": [
        (1, 2, 46, 63), (35, 47, 59, 76), (48, 49, 54, 56),
        (52, 58, 61, 79), (53, 60, 65, 80), (62, 64, 74, 78),
    ],
    "pulsar_a": [
        (1, 2, 46, 63), (35, 48, 61, 77), (47, 49, 52, 57),
        (53, 60, 65, 80), (54, 58, 59, 75), (62, 64, 74, 78),
    ],
    "pulsar_b": [
        (1, 2, 46, 63), (35, 49, 65, 81), (47, 48, 53, 55),
        (52, 58, 61, 79), (56, 59, 60, 73), (62, 64, 74, 78),
    ],
}


def spec(**ribs):
    return PuzzleSpec("test", ribs)


def as_assembly(board, rib_type, cell_sets):
    index = {p.cells: p for p in board.placements(rib_type)}
    return Assembly(tuple(index[tuple(sorted(c))] for c in cell_sets))


@pytest.mark.parametrize("rib_type", list(RibType))
def test_placement_counts(board, rib_type):
    rot, full = PLACEMENTS[rib_type]
    assert len(board.placements(rib_type)) == rot
    assert len(board.placements(rib_type, allow_mirror=True)) == full
    hist = board.rib_histogram(rib_type)
    for p in board.placements(rib_type, allow_mirror=True):
        assert board.layer_histogram(p.cells) == hist
        assert list(p.cells) == sorted(p.cells)


def test_inner_ribs_hold_two_antarctic_cells(board):
    for t in (RibType.Inner6, RibType.Inner4):
        for p in board.placements(t):
            assert sum(board.layers[c] == Layer.Antarctic for c in p.cells) == 2


def test_spine_placements_contain_the_pole(board):
    assert all(0 in p.cells for p in board.placements(RibType.Spine))


def test_equator_halves_are_mirror_images(board):
    (a, _), (b, other) = board.base_cell_sets(RibType.Equator5)
    assert other
    rot_images = {s.apply_cells(a) for s in board.rotations}
    refl_images = {s.apply_cells(a) for s in board.symmetries[60:]}
    assert tuple(sorted(b)) not in rot_images
    assert tuple(sorted(b)) in refl_images


def test_mirrored_inner_is_never_an_outer(board):
    inner = {p.cells for t in (RibType.Inner6, RibType.Inner4) for p in board.placements(t, True)}
    outer = {p.cells for t in (RibType.Outer6, RibType.Outer4) for p in board.placements(t, True)}
    assert not inner & outer


def test_rib_limits():
    assert not check_rib_limits(spec(inner4=7))["passed"]
    assert not check_rib_limits(spec(outer4=7))["passed"]
    assert check_rib_limits(spec(inner6=5, outer6=5))["passed"]
    rep = check_rib_limits(spec(inner4=6, outer4=5))
    assert not rep["passed"]
    assert any("southern temperate" in v for v in rep["violations"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_limit_violations_are_infeasible(board, i4, i6, o4, o6):
    s = spec(inner4=i4, inner6=i6, outer4=o4, outer6=o6)
    if not check_rib_limits(s)["passed"]:
        with pytest.raises(Infeasible):
            solve(s, board)


def test_sharpness(board):
    for name in ("Dc24 Star", "Dc36 Pulsar", "Dc75 Meteor"):
        a = solve(find_spec(name), board)[0]
        assert not validate_assembly(a, find_spec(name), board)


def test_meteor_contains_pole(board):
    a = solve(find_spec("Dc45 Meteor"), board)[0]
    assert len(a.cells) == 45 and 0 in a.cells
    # the 45 cells are exactly the four southernmost layers
    assert sorted(board.layers[c] for c in a.cells) == sorted(
        L for L in range(4) for _ in range(LAYER_SIZES[L])
    )


@pytest.mark.parametrize("name", list(COUNTS))
def test_counts(board, name):
    c = count_solutions(find_spec(name), board)
    assert (c["raw"], c["up_to_rotation"], c["up_to_full_symmetry"]) == COUNTS[name]


def test_galaxy_count_factorises(board):
    # the equator ribs live in the equatorial layer alone
    masks = [p.mask for p in board.placements(RibType.Equator5)]
    pairs = sum(1 for i in range(60) for j in range(i + 1, 60) if not masks[i] & masks[j])
    base = count_solutions(spec(inner4=5, outer4=5), board)["raw"]
    assert count_solutions(find_spec("Dc50 Galaxy"), board)["raw"] == base * pairs


def test_solver_order_and_determinism(board):
    a = solve(find_spec("Dc30 Ring"), board, max_solutions=5)
    b = solve(find_spec("Dc30 Ring"), board, max_solutions=5)
    assert [x.key() for x in a] == [x.key() for x in b]
    everything = solve(find_spec("Dc30 Ring"), board, max_solutions=None, break_symmetry=False)
    assert len({x.key() for x in everything}) == len(everything) == COUNTS["Dc30 Ring"][0]


def test_orbit_count_inequality(board):
    for name in ("Dc24 Star", "Dc36 Pulsar"):
        c = count_solutions(find_spec(name), board)
        assert c["raw"] >= c["up_to_rotation"] >= c["up_to_full_symmetry"]
    assert orbit_count([], board.rotations) == 0


def test_dc24_classes(board):
    star = as_assembly(board, RibType.Inner4, DC24_CLASSES["star"])
    assert assembly_symmetry_order(star, board) == 12
    assert max_upgrades(star, board) == 3
    for key in ("pulsar_a", "pulsar_b"):
        pulsar = as_assembly(board, RibType.Inner4, DC24_CLASSES[key])
        assert assembly_symmetry_order(pulsar, board) == 6
        assert max_upgrades(pulsar, board) == 6
    found_star = solve(find_spec("Dc24 Star"), board)[0]
    found_pulsar = solve(find_spec("Dc24 Pulsar"), board)[0]
    assert assembly_symmetry_order(found_star, board) == 12
    assert assembly_symmetry_order(found_pulsar, board) == 6


def test_catalog_entries():
    entries = catalog()
    assert len(entries) == 12
    by_name = {s.name: s for s in entries}
    assert by_name["Dc29 Space Invader"].ribs == {RibType.Inner6: 2, RibType.Outer6: 2, RibType.Spine: 1}
    assert by_name["Dc50 Galaxy"].ribs == {RibType.Inner4: 5, RibType.Outer4: 5, RibType.Equator5: 2}
    assert by_name["Dc75 Meteor"].ribs == {
        RibType.Inner6: 5, RibType.Outer6: 5, RibType.Spine: 1, RibType.Equator5: 2
    }
    for s in entries:
        assert s.total_cells == s.numeral
        for v in s.variants:
            assert v.counts_consistent()


def test_catalog_solves(board):
    for s in catalog():
        for v in (s,) + s.variants:
            a = solve(v, board)[0]
            assert not validate_assembly(a, v, board), v.name


def test_names_and_spec_files(tmp_path):
    assert find_spec("Dc45Meteor").name == "Dc45 Meteor"
    assert find_spec("dc45 meteor").name == "Dc45 Meteor"
    s = parse_spec_text("name = seven\ninner4 = 7\n")
    assert s.ribs == {RibType.Inner4: 7}
    j = parse_spec_text(json.dumps({"name": "x", "ribs": {"outer 6": 5}, "cells": 30}))
    assert j.ribs == {RibType.Outer6: 5} and j.counts_consistent()
    f = tmp_path / "ring.json"
    f.write_text(json.dumps({"name": "x", "ribs": {"outer6": 5}}), encoding="utf-8")
    assert load_spec(str(f)).total_cells == 30
    with pytest.raises(KeyError):
        load_spec("Dc99 Nothing")


def test_mirror_mode_solves(board):
    a = solve(find_spec("Dc75 Meteor"), board, allow_mirror=True)[0]
    assert not validate_assembly(a, find_spec("Dc75 Meteor"), board, allow_mirror=True)
