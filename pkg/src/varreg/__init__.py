"""varreg: regularity of generalized equations from nonsmooth circuits.

Models have the form ``p in f(z) + B F(C z)`` where ``F`` is a product of
one-dimensional set-valued maps given by their graphs.

Modules
-------
funcs
    Piecewise-C1 scalar functions with symbolic derivatives.
setvalued
    One-dimensional set-valued maps and their products.
cones
    Tangent and normal cones to graphs, cone algebra.
geneq
    The generalized equation model, documents and circuit fixtures.
solver
    Solution sets of the generalized equation.
regularity
    Verdicts and moduli for Aubin property, calmness and strong regularity.
trajectory
    Tracking and perturbing solution trajectories for time-varying inputs.
"""

from .errors import VarregError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["VarregError", "BACKEND", "__version__"]
