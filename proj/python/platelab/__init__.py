"""Boundary-condition checks, plate discretization and damped plate dynamics."""

from ._platelab import (
    NearSingularError,
    catalog_names,
    classify,
    decay_fit,
    determinant,
    gamma_search,
    ls_conjugated,
    operator_matrix,
    quartic_roots,
    resolvent_sweep,
    run_cli,
    simulate,
    spectrum,
    symmetry_residual,
)

__version__ = "1.0.0"

__all__ = [
    "NearSingularError",
    "catalog_names",
    "classify",
    "decay_fit",
    "determinant",
    "gamma_search",
    "ls_conjugated",
    "operator_matrix",
    "quartic_roots",
    "resolvent_sweep",
    "run_cli",
    "simulate",
    "spectrum",
    "symmetry_residual",
]
