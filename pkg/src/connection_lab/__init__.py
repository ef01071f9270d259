"""Lie-algebra-valued forms, curvature identities and gauge copies.

The main entry points are re-exported here; see the submodules for the rest.
"""
from .copies import (
    ALL_COPIES,
    ENDPOINTS_ONLY,
    NOT_COPY_PAIR,
    CopyReport,
    LineFamily,
    classify_line,
    copy_residuals,
    identity_residuals,
    make_pure_gauge,
    make_stabilizer_copy,
)
from .estimators import CopyFinder, InfinitesimalCopyFinder, LineClassifier
from .forms import Domain, FormField, exterior_derivative, from_coefficients, l2_norm, wedge
from .gauge import GroupField, cov_d_adjoint_1form, curvature
from .lie_algebra import LieAlgebra, make_algebra
from .randomfields import make_rng, random_form
from .solver import SolverOptions, assemble_linearized, find_copy, infinitesimal_copy_directions

__version__ = "0.1.0"

__all__ = [
    "ALL_COPIES",
    "ENDPOINTS_ONLY",
    "NOT_COPY_PAIR",
    "CopyFinder",
    "CopyReport",
    "Domain",
    "FormField",
    "GroupField",
    "InfinitesimalCopyFinder",
    "LieAlgebra",
    "LineClassifier",
    "LineFamily",
    "SolverOptions",
    "assemble_linearized",
    "classify_line",
    "copy_residuals",
    "cov_d_adjoint_1form",
    "curvature",
    "exterior_derivative",
    "find_copy",
    "from_coefficients",
    "identity_residuals",
    "infinitesimal_copy_directions",
    "l2_norm",
    "make_algebra",
    "make_pure_gauge",
    "make_rng",
    "make_stabilizer_copy",
    "random_form",
    "wedge",
]
