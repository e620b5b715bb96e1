"""Homology spectral sequences of cosimplicial chain complexes over F2."""

from .f2 import (
    BitMatrix,
    LinearSolver,
    Subquotient,
    Subspace,
    basis_vector,
    hstack,
    subquotient_induced_map,
    vstack,
    zero_vector,
)

__all__ = [
    "BitMatrix",
    "LinearSolver",
    "Subquotient",
    "Subspace",
    "basis_vector",
    "hstack",
    "subquotient_induced_map",
    "vstack",
    "zero_vector",
]
