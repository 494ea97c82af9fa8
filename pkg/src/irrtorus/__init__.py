"""Numerical toolkit for Strichartz estimates and quadratic Weyl sums on irrational tori."""

__version__ = "0.1.0"

from .quadform import Annulus, Cube, FreqBox, QuadraticForm, eval_Q, shell_count, strip_partition
from .field import BandLimitedField, SpaceTimeGrid, make_field, propagate_eval, spacetime_norm
from .strichartz import exponent_fit, predicted_exponent, strichartz_quotient
from .circle import arc_moments, build_arcs
from .nls import NLSProblem, evolve, invariants

__all__ = [
    "Annulus", "BandLimitedField", "Cube", "FreqBox", "NLSProblem", "QuadraticForm", "SpaceTimeGrid",
    "arc_moments", "build_arcs", "eval_Q", "evolve", "exponent_fit", "invariants", "make_field",
    "predicted_exponent", "propagate_eval", "shell_count", "spacetime_norm", "strichartz_quotient",
    "strip_partition",
]
