"""Geodesically convex optimization on Riemannian manifolds.

Manifolds, curvature constants, objectives, first-order and proximal
solvers, property checks and an experiment harness.
"""
from ._backend import BACKEND
from .geometry import PHI, constants, delta, geodesic_average, zeta
from .manifolds import SPD, Euclidean, Hyperbolic, Product, SphericalCap, build
from .objectives import Karcher, SaddleToy, SquaredDistance, karcher, regularize, saddle_toy, squared_distance
from .proximal import CRGD, EXACT, PRGD, RGDA, moreau, prox_solve, rippa, rppa
from .solvers import StepRule, crgd, prgd, rgd, rgda, subgradient_rgd

__version__ = "0.1.0"
