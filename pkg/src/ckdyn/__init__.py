"""Dynamics at infinity of the automorphisms

    H(z_1, ..., z_k) = (z_1^d + a_2 z_2 + ... + a_k z_k, z_3, ..., z_k, z_1)

of C^k: Böttcher coordinate, winding invariant in Z[1/d], generalized series
and the semiconjugacy to the model map, and the Fornaess-Wu classes of C^3.
"""

__version__ = "0.1.0"

from .automorphism import AutomorphismSpec, CPoint, classify_point, escape_radius, forward, \
    in_V_plus, inverse, iterate
from .boettcher import phi
from .winding import DyadicLike, circle_curve, winding_alpha

__all__ = ["AutomorphismSpec", "CPoint", "DyadicLike", "circle_curve", "classify_point",
           "escape_radius", "forward", "in_V_plus", "inverse", "iterate", "phi",
           "winding_alpha", "__version__"]
