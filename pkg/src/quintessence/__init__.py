"""Quaternions, the 120-cell and puzzles built from its rings."""

from .cell120 import Complex120, build_complex, cell_geometry, flag_polytopes, pole_symmetries
from .dodeca import BinaryDodecGroup, generate_group
from .meshgen import DesignParams, check_mesh, flag_design, rib_mesh
from .puzzle import Board, Infeasible, catalog, count_solutions, solve
from .strata import Layer, RibType, rib_cells, ring_layer_table, rings

__all__ = [
    "BinaryDodecGroup",
    "Board",
    "Complex120",
    "DesignParams",
    "Infeasible",
    "Layer",
    "RibType",
    "build_complex",
    "catalog",
    "cell_geometry",
    "check_mesh",
    "count_solutions",
    "flag_design",
    "flag_polytopes",
    "generate_group",
    "pole_symmetries",
    "rib_cells",
    "rib_mesh",
    "ring_layer_table",
    "rings",
    "solve",
]
