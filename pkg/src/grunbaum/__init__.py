"""Certified numerical checks for Grunbaum's projection-constant conjecture.

Modules: ``quadrature`` (B(gamma), adaptive Simpson, ODE inversion),
``certgrid`` (Lipschitz-certified extrema on nets), ``asymptotic`` (the
large-s case), ``iteration`` (2 <= s <= 14), ``oracle`` (small-N ascent)
and ``cli`` (the staged pipeline).
"""
from .constants import CONSTANTS, VerificationConstants

__all__ = ["CONSTANTS", "VerificationConstants"]
__version__ = "0.1.0"
