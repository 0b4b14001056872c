"""Linearized power-density reconstruction on 2D grids.

Thin wrapper over the compiled module; array conventions are documented on
the individual functions (shape (ny, nx) or (ny, nx, ncomp), C order).
"""

from ._pdrkit import (
    PdrkitError,
    identity_battery,
    read_field,
    reconstruct,
    solve_dirichlet,
    synthesize,
    write_field,
)

__all__ = [
    "PdrkitError",
    "identity_battery",
    "read_field",
    "reconstruct",
    "solve_dirichlet",
    "synthesize",
    "write_field",
]
