"""Numerical laboratory for the hyperbolic BC_n van Diejen many-body system."""

from .errors import (
    DomainExit,
    InvalidParameters,
    NumericalFailure,
    SpectrumDegenerate,
    StepFailure,
    VdlabError,
)
from .laxcore import CouplingParams, PhasePoint, build_bundle, involution_matrix, lax_spectrum
from .dynamics import build_b_bundle, equations_of_motion, evolve, hamiltonian, integrate
from .projection import GeodesicFlow, solve_at, solve_many
from .scattering import scattering_data, verify_asymptotics
from .invariants import VanDiejenParams, char_poly_coeffs, relation_matrix, vd_hamiltonians
from .sampling import random_case

__version__ = "0.1.0"

__all__ = [
    "CouplingParams",
    "DomainExit",
    "GeodesicFlow",
    "InvalidParameters",
    "NumericalFailure",
    "PhasePoint",
    "SpectrumDegenerate",
    "StepFailure",
    "VanDiejenParams",
    "VdlabError",
    "build_b_bundle",
    "build_bundle",
    "char_poly_coeffs",
    "equations_of_motion",
    "evolve",
    "hamiltonian",
    "integrate",
    "involution_matrix",
    "lax_spectrum",
    "random_case",
    "relation_matrix",
    "scattering_data",
    "solve_at",
    "solve_many",
    "vd_hamiltonians",
    "verify_asymptotics",
]
