"""Exceptions raised by the hip-hop solver services."""
from typing import Optional, Sequence


class HipHopError(Exception):
    """Base class for every failure raised by the services package."""


class IntegratorError(HipHopError):
    """The ODE integration could not reach the end of its time span."""


class CollisionError(IntegratorError):
    def __init__(self, r: float, r_min: float, t: Optional[float] = None):
        self.t = t
        self.r = r
        self.r_min = r_min
        where = f" at t={t:.12g}" if t is not None else ""
        super().__init__(f"collision{where}: r={r:.3e} is not above r_min={r_min:.3e}")


class BudgetExceeded(IntegratorError):
    def __init__(self, steps: int, t: float):
        self.steps = steps
        self.t = t
        super().__init__(f"step budget of {steps} exhausted at t={t:.12g}")


class StiffnessSuspected(IntegratorError):
    def __init__(self, t: float, message: str):
        self.t = t
        super().__init__(f"step size underflow at t={t:.12g}: {message}")


class SolverError(HipHopError):
    """A root-finding or continuation step did not converge."""


class NoSignChange(SolverError):
    def __init__(self, bracket: Sequence[float], values: Sequence[float]):
        self.bracket = tuple(bracket)
        self.values = tuple(values)
        super().__init__(
            f"no sign change on [{bracket[0]:.12g}, {bracket[1]:.12g}] "
            f"(values {values[0]:.3e}, {values[1]:.3e})"
        )


class SingularJacobian(SolverError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"finite-difference Jacobian is singular (condition {condition:.3e})")


class NoProgress(SolverError):
    def __init__(self, iteration: int, residual: float):
        self.iteration = iteration
        self.residual = residual
        super().__init__(f"damping exhausted at iteration {iteration}, residual {residual:.3e}")


class NewtonFailed(SolverError):
    def __init__(self, stage: str, iterations: int, residual: float, reason: str = ""):
        self.stage = stage
        self.iterations = iterations
        self.residual = residual
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(
            f"{stage}: Newton stopped after {iterations} iterations "
            f"with residual {residual:.3e}{detail}"
        )


class StageError(SolverError):
    """Wraps the failure of one stage of the staged solve."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class OutOfRegime(HipHopError):
    def __init__(self, u: float, u_max: float):
        self.u = u
        self.u_max = u_max
        super().__init__(
            f"|u|={abs(u):.12g} is outside the oscillatory regime (0, {u_max:.12g})"
        )


class SeedFailure(SolverError):
    def __init__(self, k: int, cause: Optional[Exception] = None):
        self.k = k
        self.cause = cause
        super().__init__(f"b=0 seed for k={k} could not be solved: {cause}")


class Unclassifiable(HipHopError):
    def __init__(self, match_error: float, tol: float):
        self.match_error = match_error
        self.tol = tol
        super().__init__(
            f"no closed trajectory found: best match error {match_error:.3e} exceeds tol {tol:.3e}"
        )
