"""Printable rib meshes built from one design inside a flag polytope.

Geometry is built per cell in the gnomonic chart about the cell centre,
where the spherical dodecahedron is a flat regular dodecahedron and every
great sphere through the cell is a plane.  Depth below a face is a radial
scaling toward the chart origin, i.e. a geodesic offset toward the cell
centre.  Points go back to S^3 and are projected stereographically last.

Each cell is hollow.  Under every face runs a frame strip of depth ``t``
around the inner pentagon.  External faces close the opening with a sheet
of depth ``m < t``; internal faces leave it open so neighbouring cells of
a rib share one cavity.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import quat as Q
from .cell120 import Complex120, FlagPolytope, cell_geometry, flag_polytopes
from .strata import Layer, Rib, cell_layers

HALF_FACE = math.pi / 10  # cell centre to face centre
WELD_EPS = 1e-9
MIN_AREA_MM2 = 1e-9


class DegenerateDesign(ValueError):
    pass


class NonManifoldOutput(RuntimeError):
    pass


DEFAULT_GRADE = {
    Layer.SouthPole: 1.25,
    Layer.Antarctic: 1.15,
    Layer.SouthTemperate: 1.05,
    Layer.Capricorn: 1.0,
    Layer.Equatorial: 0.9,
}


@dataclass(frozen=True)
class DesignParams:
    """Design parameters.

    ``frame_width`` is a fraction of the face inradius, ``membrane_thickness``
    a fraction of the frame depth, ``base_thickness`` a geodesic depth in
    radians, and ``scale_mm`` the millimetres per unit of projected length.
    ``vent`` replaces one external sheet of the first rib cell by an open
    window, connecting the cavity to the outside.
    """

    frame_width: float = 0.25
    membrane_thickness: float = 0.3
    base_thickness: float = 0.03
    thickness_grade: dict = field(default_factory=lambda: dict(DEFAULT_GRADE))
    tessellation_level: int = 3
    scale_mm: float = 30.0
    vent: bool = False

    def grade(self, layer) -> float:
        return float(self.thickness_grade.get(Layer(layer), 1.0))

    def replace(self, **changes) -> "DesignParams":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "DesignParams":
        if not 0.0 < self.frame_width < 0.5:
            raise DegenerateDesign(f"frame_width {self.frame_width} outside (0, 0.5)")
        if not 0.0 < self.membrane_thickness < 1.0:
            raise DegenerateDesign(
                f"membrane_thickness {self.membrane_thickness} outside (0, 1)"
            )
        if int(self.tessellation_level) != self.tessellation_level or self.tessellation_level < 1:
            raise DegenerateDesign(f"tessellation_level {self.tessellation_level} must be an integer >= 1")
        if not self.scale_mm > 0.0:
            raise DegenerateDesign(f"scale_mm {self.scale_mm} must be positive")
        for layer, g in self.thickness_grade.items():
            self.thickness(layer)
            if not g > 0.0:
                raise DegenerateDesign(f"grade for {Layer(layer).name} must be positive")
        self.thickness(None)
        return self

    def thickness(self, layer) -> float:
        t = self.base_thickness * (1.0 if layer is None else self.grade(layer))
        if not 0.0 < t < HALF_FACE:
            raise DegenerateDesign(f"frame depth {t} rad outside (0, pi/10)")
        return t


def depth_scale(d: float) -> float:
    """Chart scaling that moves a face-centre point a geodesic depth ``d`` inward."""
    return math.tan(HALF_FACE - d) / math.tan(HALF_FACE)


class FaceKind(str, enum.Enum):
    External = "external"
    Internal = "internal"
    Open = "open"  # vent: external face without its sheet


@lru_cache(maxsize=None)
def _tri_topology(n: int):
    idx = {}
    weights = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            idx[i, j] = len(weights)
            weights.append((n - i - j, i, j))
    tris = []
    for i in range(n):
        for j in range(n - i):
            tris.append((idx[i, j], idx[i + 1, j], idx[i, j + 1]))
            if i + j < n - 1:
                tris.append((idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]))
    return np.array(weights, dtype=float), np.array(tris, dtype=int)


@lru_cache(maxsize=None)
def _quad_topology(n: int, m: int):
    weights = []
    for a in range(n + 1):
        for b in range(m + 1):
            weights.append(((n - a) * (m - b), a * (m - b), a * b, (n - a) * b))
    tris = []
    for a in range(n):
        for b in range(m):
            k = a * (m + 1) + b
            k10, k01, k11 = k + m + 1, k + 1, k + m + 2
            tris.append((k, k10, k11))
            tris.append((k, k11, k01))
    return np.array(weights, dtype=float), np.array(tris, dtype=int)


def _combine(weights, corners, denom):
    # integer weights, summed in a fixed corner order and divided once, so a
    # point on a shared edge comes out bitwise-identical for both neighbours
    out = weights[:, :1] * corners[0]
    for k in range(1, len(corners)):
        out = out + weights[:, k : k + 1] * corners[k]
    return out / denom


def tri_grid(A, B, C, n: int):
    w, tris = _tri_topology(n)
    return _combine(w, (A, B, C), float(n)), tris


def quad_grid(P00, P10, P11, P01, n: int, m: int):
    w, tris = _quad_topology(n, m)
    return _combine(w, (P00, P10, P11, P01), float(n * m)), tris


def _orient(pts, tris, toward):
    """Flip triangles whose normal points away from ``toward``.

    ``toward`` is either a fixed vector or a callable of triangle centroids.
    """
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    nrm = np.cross(b - a, c - a)
    d = toward((a + b + c) / 3.0) if callable(toward) else np.broadcast_to(toward, nrm.shape)
    flip = np.einsum("ij,ij->i", nrm, d) < 0
    out = tris.copy()
    out[flip] = out[flip][:, ::-1]
    return out


@dataclass(frozen=True)
class Patch:
    """Part of the design inside one flag polytope, in S^3 coordinates.

    Vertices are not welded; pieces meeting along a seam repeat the seam's
    points.
    """

    vertices: np.ndarray  # (k, 4)
    chart: np.ndarray  # (k, 3) gnomonic coordinates about the cell centre
    triangles: np.ndarray  # (m, 3)
    parts: np.ndarray  # (m,) part label per triangle

    SHEET_PARTS = ("sheet_top", "sheet_bottom")

    @property
    def sheet_triangle_count(self) -> int:
        return int(np.isin(self.parts, self.SHEET_PARTS).sum())


def flag_design(
    flag: FlagPolytope, kind, params: DesignParams | None = None, grade: float = 1.0
) -> Patch:
    """The design inside one flag polytope.

    Every kind has the frame underside (depth ``t``) and the wall along the
    inner pentagon edge.  ``external`` adds the closing sheet: its top is the
    outer skin over the whole flag triangle, its underside sits at depth
    ``m``.  ``internal`` has no sheet and its wall runs up to the face, where
    it meets the wall of the neighbouring cell.  ``open`` is ``internal``
    plus the top of the frame strip.
    """
    params = (params or DesignParams()).validate()
    kind = FaceKind(kind)
    n = int(params.tessellation_level)
    t = params.base_thickness * grade
    if not 0.0 < t < HALF_FACE:
        raise DegenerateDesign(f"frame depth {t} rad outside (0, pi/10)")
    m = params.membrane_thickness * t
    st, sm = depth_scale(t), depth_scale(m)
    s = 1.0 - params.frame_width

    c = flag.cell
    F, E, V = (Q.gnomonic(p, c) for p in (flag.face, flag.edge, flag.vertex))
    Ei = F + s * (E - F)
    Vi = F + s * (V - F)

    pts, tris, parts = [], [], []

    def add(grid, toward, label):
        p, tr = grid
        tr = _orient(p, tr, toward)
        tris.append(tr + sum(len(x) for x in pts))
        pts.append(p)
        parts.extend([label] * len(tr))

    out = lambda x: x  # noqa: E731
    into = lambda x: -x  # noqa: E731

    if kind is FaceKind.External:
        add(tri_grid(F, E, V, n), out, "sheet_top")
        add(tri_grid(sm * F, sm * Ei, sm * Vi, n), into, "sheet_bottom")
    add(quad_grid(st * Ei, st * Vi, st * V, st * E, n, n), into, "frame")
    low = sm if kind is FaceKind.External else 1.0
    add(quad_grid(st * Ei, st * Vi, low * Vi, low * Ei, n, n), F, "wall")
    if kind is FaceKind.Open:
        add(quad_grid(Ei, Vi, V, E, n, n), out, "frame_top")

    chart = np.concatenate(pts)
    return Patch(
        vertices=Q.from_gnomonic(chart, c),
        chart=chart,
        triangles=np.concatenate(tris),
        parts=np.array(parts),
    )


def weld(points, eps: float = WELD_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Merge points closer than ``eps``.

    Returns ``(unique, index)`` with ``points[i] ~ unique[index[i]]``; unique
    points keep the order of their first occurrence.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return points.copy(), np.zeros(0, dtype=int)
    pairs = cKDTree(points).query_pairs(eps, output_type="ndarray")
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    _, first = np.unique(labels, return_index=True)
    order = np.sort(first)
    remap = np.empty(labels.max() + 1, dtype=int)
    remap[labels[order]] = np.arange(len(order))
    return points[order], remap[labels]


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (N, 3) millimetres
    triangles: np.ndarray  # (M, 3), counter-clockwise seen from outside
    triangle_cells: np.ndarray | None = None  # (M,) cell id per triangle
    parts: np.ndarray | None = None  # (M,) part label per triangle

    @classmethod
    def empty(cls) -> "Mesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))

    def cell_vertices(self, cell: int) -> np.ndarray:
        tris = self.triangles[self.triangle_cells == cell]
        return self.vertices[np.unique(tris)]

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    def triangle_normals(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        nrm = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        ln = np.linalg.norm(nrm, axis=1, keepdims=True)
        return np.divide(nrm, ln, out=np.zeros_like(nrm), where=ln > 0)


@dataclass(frozen=True)
class MeshReport:
    n_vertices: int
    n_triangles: int
    boundary_edges: int
    nonmanifold_edges: int
    manifold: bool
    oriented: bool
    components: int
    shell_volumes: tuple[float, ...]
    bodies: int
    min_area: float
    volume: float

    @property
    def single_component(self) -> bool:
        return self.components == 1

    @property
    def printable(self) -> bool:
        return self.manifold and self.oriented and self.min_area > MIN_AREA_MM2

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["shell_volumes"] = list(self.shell_volumes)
        return d


def check_mesh(mesh: Mesh) -> MeshReport:
    """Manifold, orientation and connectivity checks.

    ``components`` counts connected surface pieces; ``bodies`` counts the
    pieces enclosing positive volume, so a hollow solid with a sealed cavity
    is one body bounded by two components.
    """
    T = np.asarray(mesh.triangles, dtype=int)
    nv = len(mesh.vertices)
    if len(T) == 0:
        return MeshReport(nv, 0, 0, 0, True, True, 0, (), 0, 0.0, 0.0)
    directed = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    _, ucount = np.unique(und, axis=0, return_counts=True)
    boundary = int(np.sum(ucount == 1))
    nonman = int(np.sum(ucount > 2))
    manifold = boundary == 0 and nonman == 0
    _, dcount = np.unique(directed, axis=0, return_counts=True)
    oriented = manifold and bool(np.all(dcount == 1))

    m = len(T)
    rows = np.repeat(np.arange(m), 3)
    g = coo_matrix((np.ones(3 * m), (rows, T.ravel())), shape=(m, nv)).tocsr()
    adj = g @ g.T  # triangles sharing a vertex
    ncomp, labels = connected_components(adj, directed=False)

    v = mesh.vertices[T]
    signed = np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])) / 6.0
    vols = tuple(float(signed[labels == k].sum()) for k in range(ncomp))
    areas = mesh.triangle_areas()
    return MeshReport(
        n_vertices=nv,
        n_triangles=m,
        boundary_edges=boundary,
        nonmanifold_edges=nonman,
        manifold=manifold,
        oriented=oriented,
        components=int(ncomp),
        shell_volumes=vols,
        bodies=int(sum(1 for x in vols if x > 0)),
        min_area=float(areas.min()),
        volume=float(sum(vols)),
    )


def _vent_face(complex_: Complex120, rib: Rib) -> tuple[int, int]:
    cell = rib.cells[0]
    outside = [int(nb) for nb in complex_.neighbors[cell] if nb not in rib.cells]
    return cell, min(outside)


def face_kinds(complex_: Complex120, rib: Rib, params: DesignParams) -> dict:
    """``(cell, neighbour) -> FaceKind`` for every face of every rib cell."""
    inside = set(rib.cells)
    vent = _vent_face(complex_, rib) if params.vent else None
    out = {}
    for cell in rib.cells:
        for nb in complex_.neighbors[cell]:
            nb = int(nb)
            if nb in inside:
                out[cell, nb] = FaceKind.Internal
            elif (cell, nb) == vent:
                out[cell, nb] = FaceKind.Open
            else:
                out[cell, nb] = FaceKind.External
    return out


def rib_mesh(complex_: Complex120, rib: Rib, params: DesignParams | None = None, check: bool = True) -> Mesh:
    """Welded, projected and scaled mesh of a rib.

    Raises :class:`NonManifoldOutput` when the welded surface is not a closed
    consistently oriented 2-manifold.
    """
    params = (params or DesignParams()).validate()
    layers = cell_layers(complex_)
    kinds = face_kinds(complex_, rib, params)

    verts, tris, tcell, parts = [], [], [], []
    offset = 0
    for cell in rib.cells:
        grade = params.grade(layers[cell])
        params.thickness(layers[cell])
        geom = cell_geometry(complex_, cell)
        for flag in flag_polytopes(geom):
            nb = geom.faces[flag.face_index].neighbor
            patch = flag_design(flag, kinds[cell, nb], params, grade)
            verts.append(patch.vertices)
            tris.append(patch.triangles + offset)
            offset += len(patch.vertices)
            tcell.append(np.full(len(patch.triangles), cell))
            parts.append(patch.parts)

    unique, index = weld(np.concatenate(verts))
    T = index[np.concatenate(tris)]
    xyz = Q.stereographic(unique) * params.scale_mm
    mesh = Mesh(xyz, T, np.concatenate(tcell), np.concatenate(parts))
    if check:
        rep = check_mesh(mesh)
        if not rep.manifold or not rep.oriented:
            raise NonManifoldOutput(
                f"{rib.rib_type.value}: {rep.boundary_edges} boundary and "
                f"{rep.nonmanifold_edges} non-manifold edges, oriented={rep.oriented}"
            )
    return mesh


def internal_face_count(complex_: Complex120, rib: Rib) -> int:
    return sum(1 for a in rib.cells for b in complex_.neighbors[a] if int(b) in rib.cells)


def projected_circumradius(complex_: Complex120, cell: int, scale: float = 1.0) -> float:
    """Radius of the sphere through the projected vertices of a cell.

    Stereographic projection maps spheres to spheres, so the twenty
    projected vertices are concyclic on a round sphere; it is fitted by
    linear least squares.
    """
    P = Q.stereographic(complex_.vertex_positions[complex_.cell_vertices[cell]]) * scale
    A = np.hstack([2 * P, np.ones((len(P), 1))])
    b = np.sum(P * P, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    centre, k = sol[:3], sol[3]
    return float(math.sqrt(k + centre @ centre))


def edge_deviation(
    complex_: Complex120, level: int, cell: int = 0, scale: float = 30.0, samples: int = 64
) -> float:
    """Largest gap between a projected cell edge and its mesh polyline.

    The half edge from an edge midpoint to a vertex is cut into ``level``
    chart-uniform pieces, exactly as the frame and sheet grids cut it.
    """
    geom = cell_geometry(complex_, cell)
    flag = flag_polytopes(geom)[0]
    c = flag.cell
    E, V = Q.gnomonic(flag.edge, c), Q.gnomonic(flag.vertex, c)

    def curve(u):
        x = E[None, :] + np.asarray(u)[:, None] * (V - E)[None, :]
        return Q.stereographic(Q.from_gnomonic(x, c)) * scale

    nodes = curve(np.linspace(0.0, 1.0, level + 1))
    worst = 0.0
    for j in range(level):
        u = np.linspace(j / level, (j + 1) / level, samples)
        P = curve(u)
        a, b = nodes[j], nodes[j + 1]
        d = b - a
        w = np.clip((P - a) @ d / (d @ d), 0.0, 1.0)
        gap = np.linalg.norm(P - (a + w[:, None] * d), axis=1)
        worst = max(worst, float(gap.max()))
    return worst


def skeleton_polylines(complex_: Complex120, cells, segments: int = 8, scale: float = 30.0) -> list[np.ndarray]:
    """Projected edges of the given cells, each cut into geodesic pieces."""
    cells = set(int(c) for c in cells)
    ev = complex_.edge_vertices
    lines = []
    for eid, tri in enumerate(complex_.edges):
        if not cells.intersection(int(t) for t in tri):
            continue
        a, b = complex_.vertex_positions[ev[eid]]
        u = np.linspace(0.0, 1.0, segments + 1)[:, None]
        pts = Q.normalize((1 - u) * a[None, :] + u * b[None, :])
        lines.append(Q.stereographic(pts) * scale)
    return lines


def _io_error(path, exc):
    return OSError(f"cannot write {path}: {exc}")


def _fmt(x: float) -> str:
    s = f"{x:.9f}"
    return "0.000000000" if s == "-0.000000000" else s


def export_obj(mesh: Mesh, path) -> Path:
    path = Path(path)
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise _io_error(path, exc) from exc
    return path


def export_skeleton_obj(lines: list[np.ndarray], path) -> Path:
    path = Path(path)
    out, base = [], 1
    for pl in lines:
        out += [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in pl]
        out.append("l " + " ".join(str(base + k) for k in range(len(pl))))
        base += len(pl)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise _io_error(path, exc) from exc
    return path


def read_obj(path) -> Mesh:
    verts, faces = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return Mesh(np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=int).reshape(-1, 3))


def export_stl(mesh: Mesh, path) -> Path:
    """Binary STL: 80-byte header, uint32 count, 50 bytes per triangle."""
    path = Path(path)
    T = np.asarray(mesh.triangles, dtype=int)
    rec = np.zeros(
        len(T),
        dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]),
    )
    if len(T):
        rec["n"] = mesh.triangle_normals()
        rec["v"] = mesh.vertices[T]
    header = b"quintessence rib mesh".ljust(80, b" ")
    try:
        with path.open("wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", len(T)))
            fh.write(rec.tobytes())
    except OSError as exc:
        raise _io_error(path, exc) from exc
    return path


def read_stl_count(path) -> int:
    with Path(path).open("rb") as fh:
        fh.seek(80)
        return struct.unpack("<I", fh.read(4))[0]
