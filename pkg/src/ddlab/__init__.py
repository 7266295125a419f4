"""Exact distinct-distance laboratory for planar lattices."""

from .errors import BudgetExceeded, DDLabError, ParseError, PreconditionError, TheoremViolation
from .lattice import GramMatrix, LatticeModel, QuadForm, RationalVec2, builtin, derive_constants
from .pointset import LatticePointSet
from .spectrum import additive_energy, distance_spectrum, shift_histogram

__all__ = [
    "BudgetExceeded", "DDLabError", "ParseError", "PreconditionError", "TheoremViolation",
    "GramMatrix", "LatticeModel", "QuadForm", "RationalVec2", "builtin", "derive_constants",
    "LatticePointSet", "additive_energy", "distance_spectrum", "shift_histogram",
]
