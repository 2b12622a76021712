"""Piecewise linear finite elements for constrained nonlocal diffusion.

Meshes are plain arrays: coords (nodes, dim), cells (count, dim + 1),
region (count,) with 0 for the interior and 1 for the constraint layer.
Problems are polynomial solutions given as (terms, 4) arrays of
coefficient and exponents; the forcing is derived from the kernel.
"""

from ._core import (
    NlfemError,
    assemble_system,
    cg,
    convergence_study,
    generate_mesh,
    mesh_stats,
    read_mesh,
    solve,
    strategy_names,
    write_mesh,
)

__all__ = [
    "NlfemError",
    "assemble_system",
    "cg",
    "convergence_study",
    "generate_mesh",
    "mesh_stats",
    "read_mesh",
    "solve",
    "strategy_names",
    "write_mesh",
]
