"""The spherical 120-cell as Voronoi cells about the binary dodecahedral group.

Cells are indexed by group element id.  Faces, edges and vertices are the
2-, 3- and 4-cliques of the cell adjacency graph (cells at distance pi/5).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import quat as Q
from .dodeca import BinaryDodecGroup, generate_group

PI5 = math.pi / 5


class ComplexInconsistent(RuntimeError):
    pass


@dataclass(frozen=True)
class Complex120:
    group: BinaryDodecGroup
    neighbors: np.ndarray  # (120, 12) cell ids, sorted per row
    faces: np.ndarray  # (720, 2)
    edges: np.ndarray  # (1200, 3)
    vertex_cells: np.ndarray  # (600, 4)
    vertex_positions: np.ndarray  # (600, 4)

    @property
    def centers(self) -> np.ndarray:
        return self.group.elements

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (len(self.centers), len(self.faces), len(self.edges), len(self.vertex_cells))

    @property
    def euler_sum(self) -> int:
        c, f, e, v = self.counts
        return v - e + f - c

    @cached_property
    def cell_vertices(self) -> list[np.ndarray]:
        """Vertex ids incident to each cell."""
        out = [[] for _ in range(len(self.centers))]
        for vid, cells in enumerate(self.vertex_cells):
            for c in cells:
                out[c].append(vid)
        return [np.array(v) for v in out]

    @cached_property
    def edge_vertices(self) -> np.ndarray:
        """(1200, 2) vertex ids bounding each edge."""
        by_triple: dict[tuple, list[int]] = {}
        for vid, cells in enumerate(self.vertex_cells):
            for tri in itertools.combinations(sorted(cells), 3):
                by_triple.setdefault(tri, []).append(vid)
        out = np.empty((len(self.edges), 2), dtype=int)
        for eid, tri in enumerate(self.edges):
            vs = by_triple[tuple(int(t) for t in tri)]
            if len(vs) != 2:
                raise ComplexInconsistent(f"edge {tri} bounded by {len(vs)} vertices")
            out[eid] = sorted(vs)
        return out

    def are_adjacent(self, a: int, b: int) -> bool:
        return b in self.neighbors[a]


def build_complex(group: BinaryDodecGroup | None = None, eps: float = Q.EPS_ALG) -> Complex120:
    group = group if group is not None else generate_group()
    E = group.elements
    n = len(E)
    d = Q.dist_s3(E[:, None, :], E[None, :, :])
    adj = np.abs(d - PI5) < eps
    deg = adj.sum(axis=1)
    if np.any(deg != 12):
        raise ComplexInconsistent(f"neighbour counts {sorted(set(deg.tolist()))}, expected 12")
    neighbors = np.array([np.flatnonzero(row) for row in adj])

    faces = [(a, b) for a in range(n) for b in neighbors[a] if a < b]
    edges = [
        (a, b, c)
        for a, b in faces
        for c in neighbors[b]
        if c > b and adj[a, c]
    ]
    verts = [
        (a, b, c, e)
        for a, b, c in edges
        for e in neighbors[c]
        if e > c and adj[a, e] and adj[b, e]
    ]
    vcells = np.array(verts, dtype=int)
    pos = Q.normalize(E[vcells].sum(axis=1))

    cx = Complex120(
        group=group,
        neighbors=neighbors,
        faces=np.array(faces, dtype=int),
        edges=np.array(edges, dtype=int),
        vertex_cells=vcells,
        vertex_positions=pos,
    )
    if cx.counts != (120, 720, 1200, 600):
        raise ComplexInconsistent(f"counts {cx.counts} != (120, 720, 1200, 600)")
    return cx


@dataclass(frozen=True)
class FaceRecord:
    neighbor: int
    center: np.ndarray
    vertex_ids: tuple[int, ...]  # cyclic order
    vertices: np.ndarray  # (5, 4)


@dataclass(frozen=True)
class CellGeometry:
    cell: int
    center: np.ndarray
    faces: tuple[FaceRecord, ...]
    vertex_ids: np.ndarray
    vertices: np.ndarray  # (20, 4)

    def dihedral_angles(self, complex_: Complex120) -> list[float]:
        """Interior angle between each pair of faces sharing an edge.

        Measured in the tangent space at the edge midpoint, between the
        directions pointing into the two faces perpendicular to the edge.
        """
        out = []
        by_nb = {f.neighbor: f for f in self.faces}
        for a, b in itertools.combinations(by_nb, 2):
            if not complex_.are_adjacent(a, b):
                continue
            fa, fb = by_nb[a], by_nb[b]
            shared = sorted(set(fa.vertex_ids) & set(fb.vertex_ids))
            v1, v2 = complex_.vertex_positions[shared]
            m = Q.normalize(v1 + v2)
            t = v2 - v1 - np.dot(v2 - v1, m) * m
            t /= np.linalg.norm(t)

            def into(face_center):
                w = face_center - np.dot(face_center, m) * m - np.dot(face_center, t) * t
                return w / np.linalg.norm(w)

            wa, wb = into(fa.center), into(fb.center)
            out.append(float(np.arccos(np.clip(np.dot(wa, wb), -1, 1))))
        return out


def cell_geometry(complex_: Complex120, cell: int) -> CellGeometry:
    c = complex_.centers[cell]
    faces = []
    vset = set(complex_.cell_vertices[cell].tolist())
    for nb in complex_.neighbors[cell]:
        fc = Q.normalize(c + complex_.centers[nb])
        ids = [v for v in complex_.cell_vertices[nb] if v in vset]
        if len(ids) != 5:
            raise ComplexInconsistent(f"face {cell}|{nb} has {len(ids)} vertices")
        # angular order in the face, counter-clockwise seen from outside
        x = Q.gnomonic(complex_.vertex_positions[ids], c)
        xc = Q.gnomonic(fc, c)
        normal = xc / np.linalg.norm(xc)
        e1 = x[0] - xc
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        ang = np.arctan2((x - xc) @ e2, (x - xc) @ e1)
        order = np.argsort(ang)
        ids = tuple(int(ids[k]) for k in order)
        faces.append(
            FaceRecord(
                neighbor=int(nb),
                center=fc,
                vertex_ids=ids,
                vertices=complex_.vertex_positions[list(ids)],
            )
        )
    vids = complex_.cell_vertices[cell]
    return CellGeometry(
        cell=cell,
        center=c,
        faces=tuple(faces),
        vertex_ids=vids,
        vertices=complex_.vertex_positions[vids],
    )


@dataclass(frozen=True)
class FlagPolytope:
    """Cell centre, face centre, edge midpoint and vertex of one flag."""

    cell: np.ndarray
    face: np.ndarray
    edge: np.ndarray
    vertex: np.ndarray
    face_index: int
    edge_index: int  # position of the edge in the face's cyclic order
    right_handed: bool

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.cell, self.face, self.edge, self.vertex])


def flag_polytopes(geom: CellGeometry) -> list[FlagPolytope]:
    flags = []
    for fi, face in enumerate(geom.faces):
        vs = face.vertices
        for k in range(5):
            a, b = vs[k], vs[(k + 1) % 5]
            mid = Q.normalize(a + b)
            for v in (a, b):
                pts = np.stack([geom.center, face.center, mid, v])
                det = float(np.linalg.det(pts))
                flags.append(
                    FlagPolytope(geom.center, face.center, mid, v, fi, k, det > 0)
                )
    return flags


@dataclass(frozen=True)
class PoleSymmetry:
    kind: str  # "rotation" or "reflection"
    element: int  # group element g; the map is h -> g h g^-1 (then conjugated)
    cell_permutation: np.ndarray
    point_map: np.ndarray  # 3x3 orthogonal

    def apply_cells(self, cells) -> tuple[int, ...]:
        return tuple(sorted(int(self.cell_permutation[c]) for c in cells))


def pole_symmetries(complex_: Complex120, include_reflections: bool = False) -> list[PoleSymmetry]:
    """Symmetries of the tiling fixing the cell at +1.

    The 60 rotations come from the twisted action (``g`` and ``-g`` act
    alike); reflections compose each rotation with quaternion conjugation,
    which acts on the imaginary space as ``-1``.
    """
    grp = complex_.group
    mt, inv = grp.mul_table, grp.inv_table
    seen = set()
    rots = []
    for g in range(len(grp)):
        perm = mt[mt[g, :], inv[g]]
        key = perm.tobytes()
        if key in seen:
            continue
        seen.add(key)
        rots.append(
            PoleSymmetry("rotation", g, perm, Q.rotation_matrix(grp.elements[g]))
        )
    if not include_reflections:
        return rots
    refl = [
        PoleSymmetry("reflection", s.element, grp.conj_table[s.cell_permutation], -s.point_map)
        for s in rots
    ]
    return rots + refl


def left_translation(complex_: Complex120, g: int) -> np.ndarray:
    return complex_.group.mul_table[g, :]


def incidence_orbit_size(complex_: Complex120) -> int:
    """Size of the orbit of one (cell, face) pair under left translations
    and pole rotations together."""
    grp = complex_.group
    rots = pole_symmetries(complex_)
    start = (0, int(complex_.neighbors[0][0]))
    seen = {start}
    stack = [start]
    maps = [left_translation(complex_, g) for g in range(len(grp))]
    maps += [r.cell_permutation for r in rots]
    while stack:
        c, n = stack.pop()
        for m in maps:
            nxt = (int(m[c]), int(m[n]))
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen)
