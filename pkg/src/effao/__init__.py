"""Certified computations around special points of Y(1)^n.

Ball arithmetic for j and its derivatives, binary quadratic forms and CM
points, modular and Hilbert class polynomials, exact multivariate
polynomials with dnd/hdnd analysis, the j-field vector field, and search
and certification tools for special points on hypersurfaces.
"""

from .errors import *  # noqa: F401,F403
from .halfplane import Membership, Region, in_F, measure, reduce_to_F
from .jfun import A, Jet3, R_factor, chi_residual, cusp_gap, j, j_jet
from .modpoly import ModularPolynomial, is_isogenous, phi, phi_eval
from .quad import (
    Discriminant,
    QuadForm,
    TatuzawaConfig,
    class_number,
    decompose,
    lambda_points,
    reduced_forms,
    tatuzawa_scan,
)
from .varieties import MultiPoly, SpecialVarietyDescriptor, is_dnd, is_hdnd, parse_poly

__version__ = "0.1.0"
