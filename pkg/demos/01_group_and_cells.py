"""
The binary dodecahedral group and the 120-cell
===============================================

Two rotations generate 120 unit quaternions.  Their Voronoi cells on the
three-sphere are regular dodecahedra meeting at 2pi/3.
"""

import math

import numpy as np

from quintessence import quat as Q
from quintessence.cell120 import build_complex, cell_geometry
from quintessence.dodeca import generate_group, real_part_census

# close {p, q} under multiplication
group = generate_group()
print("group order:", len(group))
print("named elements:", group.named)

# real parts fall into nine levels, the cosines of the layer angles
print("real part census:", real_part_census(group))

# each element is the centre of one dodecahedral cell
cx = build_complex(group)
print("cells, faces, edges, vertices:", cx.counts)
print("alternating sum:", cx.euler_sum)

# neighbouring centres sit pi/5 apart
d = Q.dist_s3(cx.centers[0], cx.centers[cx.neighbors[0]])
print("neighbour distances of cell 0 / pi:", np.round(d / math.pi, 12))

# the dihedral angle of every cell is 2pi/3
ang = cell_geometry(cx, 0).dihedral_angles(cx)
print("dihedral angle:", np.mean(ang), "vs", 2 * math.pi / 3)
