"""
Assembling puzzles
==================

A puzzle is a multiset of ribs placed on disjoint cells of the southern
hemisphere.  Placements are the images of one rib under the sixty
rotations fixing the south pole.
"""

from quintessence.puzzle import (
    Infeasible,
    PuzzleSpec,
    assembly_symmetry_order,
    catalog,
    check_rib_limits,
    count_solutions,
    default_board,
    find_spec,
    solve,
)
from quintessence.strata import RibType

board = default_board()

for t in RibType:
    print(f"{t.value:9s} placements: {len(board.placements(t))}")

# one assembly of each catalogued puzzle
for spec in catalog():
    a = solve(spec, board)[0]
    print(f"{spec.name:20s} symmetry {assembly_symmetry_order(a, board):2d}  ", [p.cells for p in a.placements])

# the Meteor: raw assemblies, and orbits under rotations and reflections
print("Dc45 Meteor:", count_solutions(find_spec("Dc45 Meteor"), board))

# seven inner 4s need fourteen antarctic cells; there are twelve
seven = PuzzleSpec("seven", {RibType.Inner4: 7})
print(check_rib_limits(seven)["violations"])
try:
    solve(seven, board)
except Infeasible as exc:
    print("search:", exc)
