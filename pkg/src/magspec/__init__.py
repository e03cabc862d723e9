"""Magnetic Schrodinger spectra on tori, rectangles and surfaces, with explicit bound checks."""

from .bounds import FORMULAS, Quantities, gamma, recompute
from .eigensolver import HermitianOperator, SpectralResult, lowest_eigenpairs
from .estimator import MagneticSpectrum
from .exact_torus import ConstantForm, FlatTorus, exact_lambda1, exact_spectrum
from .lattice import Lattice, closest_vectors, dual, enumerate_points, flux_lattice
from .reports import BoundReport

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ConstantForm",
    "FORMULAS",
    "FlatTorus",
    "HermitianOperator",
    "Lattice",
    "MagneticSpectrum",
    "Quantities",
    "SpectralResult",
    "closest_vectors",
    "dual",
    "enumerate_points",
    "exact_lambda1",
    "exact_spectrum",
    "flux_lattice",
    "gamma",
    "lowest_eigenpairs",
    "recompute",
]
