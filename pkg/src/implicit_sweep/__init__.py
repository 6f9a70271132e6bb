"""Implicit sweeping process with velocity constraint.

Catching-up solver for -u' in N_{C(t)}(A u' + B u), the equivalent
quasistatic evolution variational inequality with weighted-l1 friction, and
an antiplane frictional contact demo that ties the two together.
"""

from .convex import Ball, BallIntersection, Box, ConvexSet, Reflect, Translate, normal_cone_contains, truncate
from .errors import (
    ConvergenceError,
    FactorizationError,
    InconsistencyError,
    InvalidInputError,
    SweepError,
    UnboundedSupportError,
)
from .evi import EviProblem, FrictionFunctional, crosscheck, solve_evi, to_sweeping
from .moving_set import PiecewiseLinearPath, SampledFamily, TranslatedFamily, polynomial_path
from .operators import SymmetricOperator, validate_sp1
from .sweeping import SolverOptions, SweepingProblem, Trajectory, solve, velocity_bounds, viability_residual

__all__ = [
    "Ball",
    "BallIntersection",
    "Box",
    "ConvexSet",
    "ConvergenceError",
    "EviProblem",
    "FactorizationError",
    "FrictionFunctional",
    "InconsistencyError",
    "InvalidInputError",
    "PiecewiseLinearPath",
    "Reflect",
    "SampledFamily",
    "SolverOptions",
    "SweepError",
    "SweepingProblem",
    "SymmetricOperator",
    "Trajectory",
    "Translate",
    "TranslatedFamily",
    "UnboundedSupportError",
    "crosscheck",
    "normal_cone_contains",
    "polynomial_path",
    "solve",
    "solve_evi",
    "to_sweeping",
    "truncate",
    "validate_sp1",
    "velocity_bounds",
    "viability_residual",
]
