from .continuation import Family, StepOptions, classify_choreography, continue_family, refine_choreography
from .errors import HipHopError, IntegratorError, SolverError
from .flow import ShootingPoint, evaluate_maps, residual2_primaries, residual3, verify_periodicity
from .integrator import IntegratorOptions, Trajectory, integrate, locate_event
from .model import ProblemParams, ReducedState, derived_constants, sum_constants
from .period import period_curve, period_T, turning_point
from .solver import NewtonOptions, SolutionPoint, newton_solve, solve_point

__all__ = [
    "Family",
    "HipHopError",
    "IntegratorError",
    "IntegratorOptions",
    "NewtonOptions",
    "ProblemParams",
    "ReducedState",
    "ShootingPoint",
    "SolutionPoint",
    "SolverError",
    "StepOptions",
    "Trajectory",
    "classify_choreography",
    "continue_family",
    "derived_constants",
    "evaluate_maps",
    "integrate",
    "locate_event",
    "newton_solve",
    "period_T",
    "period_curve",
    "refine_choreography",
    "residual2_primaries",
    "residual3",
    "solve_point",
    "sum_constants",
    "turning_point",
    "verify_periodicity",
]
