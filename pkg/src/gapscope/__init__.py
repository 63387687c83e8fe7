"""Band structure and closed spectral gaps of periodic Jacobi matrices."""

from __future__ import annotations

from .census import CensusConfig, CensusResult, characterization_check, run_census, verify_known_table
from .families import FamilySpec, double_construct, make_family
from .jacobi import CoefficientVector, Model, discriminant, make_vector, monodromy_poly
from .poly import Backend, Polynomial
from .spectrum import (
    band_function,
    band_structure,
    closed_gaps,
    closed_gaps_exact,
    closed_gaps_float,
    floquet_crosscheck,
    reflection_report,
)

__version__ = "0.1.0"

__all__ = [
    "Backend", "Polynomial", "Model", "CoefficientVector", "make_vector", "discriminant",
    "monodromy_poly", "band_structure", "closed_gaps", "closed_gaps_exact", "closed_gaps_float",
    "band_function", "floquet_crosscheck", "reflection_report", "FamilySpec", "make_family",
    "double_construct", "CensusConfig", "CensusResult", "run_census", "verify_known_table",
    "characterization_check",
]
