"""Kovalevskaya-type top on the so(4) pencil: exact brackets, molecule homology,
classification of isoenergy 3-manifolds and numerical scans of Q^3."""
from .algebra import Poly, poisson_bracket
from .classify import ManifoldClass, classify, parse_class, propagate
from .homology import AbelianGroup, first_homology, smith_normal_form
from .molecule import Molecule, parse_molecule, serialize, validate
from .system import OrbitParams, PhasePoint, casimirs, first_integral, hamiltonian

__version__ = "0.1.0"

__all__ = [
    "AbelianGroup", "ManifoldClass", "Molecule", "OrbitParams", "PhasePoint", "Poly",
    "casimirs", "classify", "first_homology", "first_integral", "hamiltonian",
    "parse_class", "parse_molecule", "poisson_bracket", "propagate", "serialize",
    "smith_normal_form", "validate",
]
