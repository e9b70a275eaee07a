"""CSV / JSON writers for command outputs.

Data files carry no run metadata; that goes to a `<out>.meta.json` sidecar so
repeated runs produce byte-identical data.
"""
import csv
import io
import json
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence, TextIO, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from services.continuation import ChoreographyClass, Family
from services.errors import OutOfRegime
from services.flow import PeriodicityReport
from services.integrator import Trajectory
from services.model import DerivedConstants, ProblemParams, reduced_energy
from services.period import PeriodSample
from services.solver import SolutionPoint

TRAJECTORY_HEADER = "t,r,r_dot,d,d_dot,theta,z,z_dot,energy"
BODIES_HEADER = "t,body,x,y,z"
PERIOD_HEADER = ["u", "c", "t1", "T", "error"]


class _Record(BaseModel):
    model_config = ConfigDict(populate_by_name=True)


class ParamsRecord(_Record):
    N: int
    m: float
    r0: float


class ConstantsRecord(_Record):
    params: ParamsRecord
    alpha_n: float = Field(serialization_alias="alphaN")
    gamma_n: float = Field(serialization_alias="gammaN")
    a_star: float = Field(serialization_alias="aStar")
    t1_star: float = Field(serialization_alias="T1Star")
    t2_star: float = Field(serialization_alias="T2Star")
    u_max: float = Field(serialization_alias="uMax")
    k: int


class ReportRecord(_Record):
    residual: list[float]
    residual_norm: float = Field(serialization_alias="residualNorm")
    state_gap: float = Field(serialization_alias="stateGap")
    theta_advance: float = Field(serialization_alias="thetaAdvance")
    symmetry_defect: float = Field(serialization_alias="symmetryDefect")
    energy_drift: float = Field(serialization_alias="energyDrift")
    passed: Optional[bool] = None


class SolutionRecord(_Record):
    a: float
    b: float
    u: float
    T: float
    k: int
    residual: list[float]
    state_gap: float = Field(serialization_alias="stateGap")
    symmetry_defect: float = Field(serialization_alias="symmetryDefect")
    energy_drift: float = Field(serialization_alias="energyDrift")
    converged: bool
    iterations: int


class FamilyRecord(_Record):
    params: ParamsRecord
    k: int
    points: list[SolutionRecord]


class ChoreographyRecord(_Record):
    trajectory_count: int = Field(serialization_alias="trajectoryCount")
    theta_advance: float = Field(serialization_alias="thetaAdvance")
    match_error: float = Field(serialization_alias="matchError")
    members: list[int]
    point: Optional[SolutionRecord] = None


def params_record(params: ProblemParams) -> ParamsRecord:
    return ParamsRecord(N=params.N, m=params.m, r0=params.r0)


def constants_record(params: ProblemParams, consts: DerivedConstants, k: int) -> ConstantsRecord:
    return ConstantsRecord(
        params=params_record(params),
        alpha_n=consts.alpha_n,
        gamma_n=consts.gamma_n,
        a_star=consts.a_star,
        t1_star=consts.t1_star,
        t2_star=consts.t2_star,
        u_max=consts.u_max,
        k=k,
    )


def report_record(report: PeriodicityReport, passed: Optional[bool] = None) -> ReportRecord:
    return ReportRecord(
        residual=list(report.residual),
        residual_norm=report.residual_norm,
        state_gap=report.state_gap,
        theta_advance=report.theta_advance,
        symmetry_defect=report.symmetry_defect,
        energy_drift=report.energy_drift,
        passed=passed,
    )


def solution_record(point: SolutionPoint) -> SolutionRecord:
    return SolutionRecord(
        a=point.a,
        b=point.b,
        u=point.u,
        T=point.T,
        k=point.k,
        residual=list(point.report.residual),
        state_gap=point.report.state_gap,
        symmetry_defect=point.report.symmetry_defect,
        energy_drift=point.report.energy_drift,
        converged=point.converged,
        iterations=point.iterations,
    )


def family_record(family: Family) -> FamilyRecord:
    return FamilyRecord(
        params=params_record(family.params),
        k=family.k,
        points=[solution_record(p) for p in family.all_points],
    )


def choreography_record(result: ChoreographyClass, point: Optional[SolutionPoint] = None) -> ChoreographyRecord:
    return ChoreographyRecord(
        trajectory_count=result.trajectory_count,
        theta_advance=result.theta_advance,
        match_error=result.match_error,
        members=list(result.members),
        point=solution_record(point) if point is not None else None,
    )


def to_json(record: BaseModel) -> str:
    return record.model_dump_json(by_alias=True, indent=2) + "\n"


def write_text(text: str, out: Optional[str], stream: Optional[TextIO] = None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        (stream or sys.stdout).write(text)


def trajectory_rows(params: ProblemParams, traj: Trajectory, dt: float) -> np.ndarray:
    """Rows (t, state..., energy) every dt from t0, always including the end time."""
    t0, t1 = traj.t_span
    count = int(np.floor(abs(t1 - t0) / dt + 1e-9))
    times = t0 + np.sign(t1 - t0) * dt * np.arange(count + 1)
    # Rounding in k*dt must not add a second row a hair before t1.
    if abs(times[-1] - t1) <= 1e-9 * dt:
        times[-1] = t1
    else:
        times = np.append(times, t1)
    states = traj.sample(times)
    energies = np.array([reduced_energy(params, traj.a, traj.state(t)) for t in times])
    return np.column_stack([times, states, energies])


def trajectory_csv(rows: np.ndarray) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, rows, fmt="%.17g", delimiter=",", header=TRAJECTORY_HEADER, comments="")
    return buffer.getvalue()


def bodies_csv(times: Sequence[float], positions: np.ndarray) -> str:
    rows = [
        [t, body, *positions[i, body]]
        for i, t in enumerate(times)
        for body in range(positions.shape[1])
    ]
    buffer = io.StringIO()
    np.savetxt(buffer, np.array(rows), fmt=["%.17g", "%d", "%.17g", "%.17g", "%.17g"],
               delimiter=",", header=BODIES_HEADER, comments="")
    return buffer.getvalue()


def period_csv(rows: Sequence[Union[PeriodSample, OutOfRegime]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PERIOD_HEADER)
    for row in rows:
        if isinstance(row, PeriodSample):
            writer.writerow([f"{row.u:.17g}", f"{row.c:.17g}", f"{row.t1:.17g}", f"{row.T:.17g}", ""])
        else:
            writer.writerow([f"{row.u:.17g}", "", "", "", "out_of_regime"])
    return buffer.getvalue()


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_sidecar(out: Optional[str], command: str, argv: Sequence[str]) -> None:
    """Run metadata next to a data file; nothing is written for stdout output."""
    if not out:
        return
    meta = {
        "command": command,
        "argv": list(argv),
        "created": datetime.now(timezone.utc).isoformat(),
        "versions": {name: _version(name) for name in ("numpy", "scipy", "pydantic", "pydantic-settings")},
    }
    Path(f"{out}.meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
