"""
Rings, layers and ribs
======================

Cosets of the order-ten subgroup generated by q are rings of ten cells,
twelve linked great circles.  Cutting each ring at the equator leaves the
puzzle pieces.
"""

from quintessence.cli import format_table, tables
from quintessence.puzzle import default_board
from quintessence.strata import RibType, hopf_check, layer_histogram, rib_cells

board = default_board()
cx, ring_list = board.complex, board.rings

for r in ring_list:
    print(f"{r.name:8s}", r.cells)

# how many cells of each kind of ring meet each layer
print(format_table(tables("rings", board)))

# every ring spans a 2-plane in R^4
worst = max(h["sigma_ratio"] for h in hopf_check(cx, ring_list).values())
print("largest sigma3/sigma1 over the rings:", worst)

# the six rib types and where their cells lie
for t in RibType:
    rib = rib_cells(cx, ring_list, t)
    hist = {L.name: n for L, n in sorted(layer_histogram(cx, rib.cells).items())}
    print(f"{t.value:9s}", rib.cells, hist)
