"""
Printable ribs
==============

Each cell is hollowed into frames, with a closing sheet on the faces
that meet the outside.  The design is built in S^3 and projected
stereographically at the end, so cells near the pole come out smaller.
"""

import sys
import tempfile
from pathlib import Path

from quintessence.meshgen import DesignParams, check_mesh, export_stl, projected_circumradius, rib_mesh
from quintessence.puzzle import default_board
from quintessence.strata import Layer, RibType, rib_cells

board = default_board()
cx = board.complex
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())

for t in RibType:
    mesh = rib_mesh(cx, rib_cells(cx, board.rings, t))
    rep = check_mesh(mesh)
    path = export_stl(mesh, out / f"{t.value}.stl")
    print(f"{t.value:9s} {rep.n_triangles:6d} triangles  manifold={rep.manifold} "
          f"oriented={rep.oriented} shells={rep.components} volume={rep.volume:.1f} mm^3  {path}")

# the outer skin and the cavity are separate shells; a vent joins them
rib = rib_cells(cx, board.rings, RibType.Inner4)
print("vented shells:", check_mesh(rib_mesh(cx, rib, DesignParams(vent=True))).components)

# the pole cell is about half the size of an equatorial one
eq = list(board.layers).index(Layer.Equatorial)
print("size ratio pole/equator:", projected_circumradius(cx, 0) / projected_circumradius(cx, eq))
