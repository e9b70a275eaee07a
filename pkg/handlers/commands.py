import logging
from typing import Optional, Sequence

import numpy as np

from config import RunConfig
from services.continuation import classify_choreography, continue_family, refine_choreography
from services.flow import ShootingPoint, initial_state, verify_periodicity
from services.integrator import integrate
from services.model import body_positions, smallest_multiple
from services.period import PeriodSample, period_curve
from services.solver import solve_point
from utils.export import (
    bodies_csv,
    choreography_record,
    constants_record,
    family_record,
    period_csv,
    report_record,
    solution_record,
    to_json,
    trajectory_csv,
    trajectory_rows,
    write_sidecar,
    write_text,
)

logger = logging.getLogger(__name__)

# Process exit statuses shared by the handler and main.py.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INTEGRATOR = 4
EXIT_VERIFY = 5

# Body snapshot times as fractions of T.
DEFAULT_BODY_FRACTIONS = (0.5, 0.75, 1.0, 1.25, 1.5)


class CommandHandler:
    """Wires a RunConfig to the services for each CLI command.

    Every command writes its artifact (to `config.out` or stdout) and returns
    the process exit status. Library errors propagate to the caller.
    """

    def __init__(self, config: RunConfig, argv: Sequence[str] = ()):
        self.config = config
        self.argv = list(argv)
        self.params = config.problem_params()
        self.integ_opts = config.integrator_options()
        self.newton_opts = config.newton_options()
        self.step_opts = config.step_options()

    def _emit(self, command: str, text: str) -> None:
        write_text(text, self.config.out)
        write_sidecar(self.config.out, command, self.argv)

    def constants(self) -> int:
        consts = self.params.constants
        k = smallest_multiple(consts)
        print(f"N={self.params.N} m={self.params.m:g} r0={self.params.r0:g}")
        print(f"alpha_N = {consts.alpha_n:.17g}")
        print(f"gamma_N = {consts.gamma_n:.17g}")
        print(f"a*      = {consts.a_star:.17g}")
        print(f"T1*     = {consts.t1_star:.17g}")
        print(f"T2*     = {consts.t2_star:.17g}")
        print(f"uMax    = {consts.u_max:.17g}")
        print(f"k       = {k}")
        if self.config.out:
            self._emit("constants", to_json(constants_record(self.params, consts, k)))
        return EXIT_OK

    def simulate(self, a: float, b: float, u: float, t_end: float) -> int:
        traj = integrate(self.params, a, initial_state(self.params, b, u), (0.0, t_end), self.integ_opts)
        logger.info("Simulated to t=%.9g in %d steps (%d rejected)", t_end, traj.step_count, traj.rejected_count)
        rows = trajectory_rows(self.params, traj, self.config.output_dt)
        self._emit("simulate", trajectory_csv(rows))
        return EXIT_OK

    def solve(self, b: float, k: Optional[int] = None) -> int:
        k = k or smallest_multiple(self.params.constants)
        point = solve_point(self.params, b, k, self.newton_opts, self.integ_opts, polish=self.config.polish)
        if point.other_u:
            logger.warning("Other roots for u near %s were not followed", ", ".join(f"{u:.6g}" for u in point.other_u))
        self._emit("solve", to_json(solution_record(point)))
        return EXIT_OK if point.converged else EXIT_SOLVER

    def family(self, b_max: float, k: Optional[int] = None) -> int:
        k = k or smallest_multiple(self.params.constants)
        family = continue_family(self.params, k, b_max, self.step_opts, self.newton_opts, self.integ_opts)
        self._emit("family", to_json(family_record(family)))
        if family.stop_reason != "reached b_max":
            logger.error("Family stopped at b=%.9g: %s", family.b_reached, family.stop_reason)
            return EXIT_SOLVER
        return EXIT_OK

    def period_curve(self, u_grid: Sequence[float]) -> int:
        rows = period_curve(self.params, u_grid)
        self._emit("period-curve", period_csv(rows))
        if not any(isinstance(row, PeriodSample) for row in rows):
            logger.error("No u in the grid lies inside (0, uMax=%.9g)", self.params.constants.u_max)
            return EXIT_SOLVER
        return EXIT_OK

    def verify(self, a: float, b: float, u: float, T: float, tol: Optional[float] = None) -> int:
        tol = tol if tol is not None else self.config.verify_tol
        report = verify_periodicity(self.params, ShootingPoint(a=a, b=b, u=u, T=T), self.integ_opts)
        passed = report.residual_norm <= tol
        self._emit("verify", to_json(report_record(report, passed=passed)))
        if not passed:
            logger.error("Residual %.3e above tolerance %.3e", report.residual_norm, tol)
            return EXIT_VERIFY
        return EXIT_OK

    def bodies(self, a: float, b: float, u: float, T: float, times: Optional[Sequence[float]] = None) -> int:
        times = sorted(times) if times else [f * T for f in DEFAULT_BODY_FRACTIONS]
        t_end = max(max(times), 1e-12)
        traj = integrate(self.params, a, initial_state(self.params, b, u), (0.0, t_end), self.integ_opts)
        positions = body_positions(self.params, traj, np.asarray(times))
        self._emit("bodies", bodies_csv(times, positions))
        return EXIT_OK

    def classify(
        self, a: float, b: float, u: float, T: float, tol: Optional[float] = None, refine: bool = False,
    ) -> int:
        tol = tol if tol is not None else self.config.choreography_tol
        point = ShootingPoint(a=a, b=b, u=u, T=T)
        refined = None
        if refine:
            refined = refine_choreography(self.params, point, newton_opts=self.newton_opts, integ_opts=self.integ_opts)
            point = refined.shooting_point
        result = classify_choreography(self.params, point, tol=tol, integ_opts=self.integ_opts)
        self._emit("classify", to_json(choreography_record(result, refined)))
        return EXIT_OK
