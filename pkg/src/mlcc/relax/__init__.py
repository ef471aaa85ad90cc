"""Convex relaxations with lazy triangle-inequality generation."""

from .lp import LinearProgramSpec, LinearRow, LPSolution, solve_lp
from .lpfile import dumps_lp, loads_lp, read_lp, write_lp
from .relaxation import (
    PseudoMetric,
    RelaxationSolution,
    SolverLog,
    build_lp,
    layer_costs,
    solve_relaxation,
    triangle_rows,
)
from .separation import TriangleCut, max_triangle_violation, separate_triangles

__all__ = [
    "LinearProgramSpec",
    "LinearRow",
    "LPSolution",
    "PseudoMetric",
    "RelaxationSolution",
    "SolverLog",
    "TriangleCut",
    "build_lp",
    "dumps_lp",
    "layer_costs",
    "loads_lp",
    "max_triangle_violation",
    "read_lp",
    "separate_triangles",
    "solve_lp",
    "solve_relaxation",
    "triangle_rows",
    "write_lp",
]
