from .export import (
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

__all__ = [
    "bodies_csv",
    "choreography_record",
    "constants_record",
    "family_record",
    "period_csv",
    "report_record",
    "solution_record",
    "to_json",
    "trajectory_csv",
    "trajectory_rows",
    "write_sidecar",
    "write_text",
]
