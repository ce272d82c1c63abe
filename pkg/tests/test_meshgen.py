import math
import struct

import numpy as np
import pytest
from scipy.spatial import cKDTree

from quintessence import quat as Q
from quintessence.cell120 import cell_geometry, flag_polytopes
from quintessence.meshgen import (
    DegenerateDesign,
    DesignParams,
    FaceKind,
    Mesh,
    check_mesh,
    depth_scale,
    edge_deviation,
    export_obj,
    export_stl,
    face_kinds,
    flag_design,
    internal_face_count,
    projected_circumradius,
    read_obj,
    read_stl_count,
    rib_mesh,
    weld,
)
from quintessence.strata import Layer, RibType, cell_layers, rib_cells


@pytest.fixture(scope="module")
def meshes(cx, ring_list):
    return {t: rib_mesh(cx, rib_cells(cx, ring_list, t)) for t in RibType}


@pytest.fixture(scope="module")
def flags(cx):
    return flag_polytopes(cell_geometry(cx, 0))


def test_depth_scale():
    assert depth_scale(0.0) == 1.0
    # the face centre moves exactly d toward the cell centre
    for d in (0.01, 0.05):
        x = np.array([0, 0, math.tan(math.pi / 10) * depth_scale(d)])
        p = Q.from_gnomonic(x, Q.ONE)
        assert math.isclose(Q.dist_s3(p, Q.ONE), math.pi / 10 - d, abs_tol=1e-12)


def test_params_validation():
    DesignParams().validate()
    for bad in (
        dict(frame_width=0.5),
        dict(frame_width=0.0),
        dict(membrane_thickness=1.0),
        dict(base_thickness=0.0),
        dict(base_thickness=0.4),
        dict(tessellation_level=0),
        dict(scale_mm=-1.0),
    ):
        with pytest.raises(DegenerateDesign):
            DesignParams(**bad).validate()


def test_external_minus_sheet_is_internal(flags):
    ext = flag_design(flags[0], "external")
    inn = flag_design(flags[0], "internal")
    assert len(inn.triangles) == len(ext.triangles) - ext.sheet_triangle_count
    assert inn.sheet_triangle_count == 0
    assert set(ext.parts) == {"sheet_top", "sheet_bottom", "frame", "wall"}


def test_patch_points_lie_in_the_flag(flags):
    f = flags[7]
    patch = flag_design(f, FaceKind.External)
    # barycentric coordinates w.r.t. the flag simplex are all non-negative
    coords = np.linalg.solve(f.points.T, patch.vertices.T).T
    assert coords.min() > -1e-12
    assert np.allclose(Q.norm(patch.vertices), 1.0)


def test_mirror_flags_share_wall_points_bitwise(flags):
    # flags 0 and 1 share the face-centre to edge-midpoint wall
    a, b = flags[0], flags[1]
    assert np.array_equal(a.edge, b.edge) and not np.array_equal(a.vertex, b.vertex)
    pa, pb = flag_design(a, "external"), flag_design(b, "external")
    sa = {tuple(v) for v in pa.vertices}
    sb = {tuple(v) for v in pb.vertices}
    shared = sa & sb
    n = DesignParams().tessellation_level
    # sheet top, sheet bottom, frame underside and wall seams, n+1 points
    # each; the wall shares one end with the frame and one with the sheet
    assert len(shared) == 4 * (n + 1) - 2


def test_twenty_patches_form_two_frames(cx):
    geom = cell_geometry(cx, 0)
    fl = [f for f in flag_polytopes(geom) if f.face_index in (0, 1)]
    assert len(fl) == 20
    pts, tris, off = [], [], 0
    for f in fl:
        p = flag_design(f, "external")
        pts.append(p.vertices)
        tris.append(p.triangles + off)
        off += len(p.vertices)
    uniq, idx = weld(np.concatenate(pts))
    T = idx[np.concatenate(tris)]
    rep = check_mesh(Mesh(uniq[:, 1:], T))
    # only the outer rim of the two faces stays open; all flag walls glue
    edges = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1)
    e, c = np.unique(edges, axis=0, return_counts=True)
    open_edges = e[c == 1]
    assert len(open_edges) > 0
    x = Q.gnomonic(uniq, geom.center)
    # every open edge lies on a cell-edge wall: a plane through the chart
    # origin and an edge of face 0 or 1
    walls = []
    for fi in (0, 1):
        V = Q.gnomonic(geom.faces[fi].vertices, geom.center)
        for k in range(5):
            n = np.cross(V[k], V[(k + 1) % 5])
            walls.append(n / np.linalg.norm(n))
    walls = np.array(walls)
    on_wall = np.abs(x[open_edges[:, 0]] @ walls.T).min(axis=1) < 1e-9
    on_wall &= np.abs(x[open_edges[:, 1]] @ walls.T).min(axis=1) < 1e-9
    assert on_wall.all()
    assert rep.nonmanifold_edges == 0


def test_weld_keeps_first_occurrence():
    pts = np.array([[0, 0, 0, 1.0], [1, 0, 0, 0], [0, 0, 0, 1 + 1e-12], [1, 0, 0, 0]])
    u, idx = weld(pts)
    assert idx.tolist() == [0, 1, 0, 1]
    assert np.array_equal(u, pts[:2])


@pytest.mark.parametrize("rib_type", list(RibType))
def test_rib_mesh_is_closed_oriented_solid(meshes, rib_type):
    rep = check_mesh(meshes[rib_type])
    assert rep.manifold and rep.oriented
    assert rep.min_area > 1e-9
    assert rep.bodies == 1
    assert rep.volume > 0


def test_rib_mesh_has_a_sealed_cavity(meshes):
    # the sheets on external faces separate the inside from the outside,
    # so the boundary is an outer skin plus one inner shell
    for m in meshes.values():
        rep = check_mesh(m)
        assert rep.components == 2
        outer, inner = sorted(rep.shell_volumes, reverse=True)
        assert outer > -inner > 0


def test_vent_opens_the_cavity(cx, ring_list):
    for t in (RibType.Inner6, RibType.Spine):
        m = rib_mesh(cx, rib_cells(cx, ring_list, t), DesignParams(vent=True))
        rep = check_mesh(m)
        assert rep.manifold and rep.oriented and rep.components == 1


def test_internal_faces(cx, ring_list):
    rib = rib_cells(cx, ring_list, RibType.Inner6)
    assert internal_face_count(cx, rib) == 10
    kinds = face_kinds(cx, rib, DesignParams())
    assert sum(k is FaceKind.Internal for k in kinds.values()) == 10


def test_spine_rotation_invariance(cx, meshes):
    m = meshes[RibType.Spine]
    R = Q.rotation_matrix(cx.centers[cx.group.named["q"]])
    d, _ = cKDTree(m.vertices).query(m.vertices @ R.T)
    assert d.max() < 1e-6


def test_antarctic_cells_congruent(cx, ring_list, board, meshes):
    rib = rib_cells(cx, ring_list, RibType.Spine)
    layers = cell_layers(cx)
    a, b = [c for c in rib.cells if layers[c] == Layer.Antarctic]
    sym = next(
        s for s in board.rotations
        if s.apply_cells(rib.cells) == tuple(sorted(rib.cells)) and s.cell_permutation[a] == b
    )
    m = meshes[RibType.Spine]
    A = m.cell_vertices(a) @ sym.point_map.T
    B = m.cell_vertices(b)
    assert len(A) == len(B)
    assert cKDTree(B).query(A)[0].max() < 1e-6


def test_cells_shrink_toward_the_pole(cx):
    eq = int(np.flatnonzero(cell_layers(cx) == Layer.Equatorial)[0])
    ratio = projected_circumradius(cx, 0) / projected_circumradius(cx, eq)
    expected = Q.stereo_derivative(0.0) / Q.stereo_derivative(math.pi / 2)
    assert abs(ratio - expected) <= 0.2 * expected


def test_refinement_converges(cx):
    dev = [edge_deviation(cx, n) for n in range(1, 7)]
    assert all(b < a for a, b in zip(dev, dev[1:]))
    for n in (1, 2, 3):
        assert dev[2 * n - 1] <= 0.5 * dev[n - 1]


def test_thickness_grading(cx, ring_list):
    rib = rib_cells(cx, ring_list, RibType.Spine)
    thin = DesignParams(thickness_grade={})
    a = check_mesh(rib_mesh(cx, rib)).volume
    b = check_mesh(rib_mesh(cx, rib, thin)).volume
    # the pole and antarctic cells get thicker walls by default
    assert a > b


def test_stl_export(tmp_path, meshes):
    m = meshes[RibType.Inner4]
    p = export_stl(m, tmp_path / "r.stl")
    assert read_stl_count(p) == len(m.triangles)
    assert p.stat().st_size == 84 + 50 * len(m.triangles)
    with open(p, "rb") as fh:
        fh.seek(84)
        rec = fh.read(50)
    vals = struct.unpack("<12fH", rec)
    assert vals[-1] == 0
    assert np.allclose(vals[3:6], m.vertices[m.triangles[0, 0]], atol=1e-4)


def test_empty_stl_is_84_bytes(tmp_path):
    p = export_stl(Mesh.empty(), tmp_path / "e.stl")
    assert p.stat().st_size == 84
    assert read_stl_count(p) == 0


def test_obj_round_trip(tmp_path, meshes):
    m = meshes[RibType.Outer4]
    back = read_obj(export_obj(m, tmp_path / "r.obj"))
    assert np.abs(back.vertices - m.vertices).max() < 1e-6
    assert np.array_equal(back.triangles, m.triangles)


def test_export_error_names_path(tmp_path, meshes):
    with pytest.raises(OSError, match="missing"):
        export_obj(meshes[RibType.Spine], tmp_path / "missing" / "x.obj")
