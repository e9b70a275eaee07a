import os
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from services.continuation import StepOptions
from services.integrator import IntegratorOptions
from services.model import ProblemParams
from services.solver import NewtonOptions

CONFIG_ENV_VAR = "HIPHOP_CONFIG"


class ConfigError(Exception):
    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        prefix = f"{field}{where}: " if field else ""
        super().__init__(f"{prefix}{message}")


class RunConfig(BaseSettings):
    # Problem
    N: int = 3
    m: float = 1.0
    r0: float = 2.0

    # Integrator
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: Optional[float] = None
    max_steps: int = 10_000_000
    r_min: Optional[float] = None  # defaults to 1e-8 * r0

    # Newton
    fd_step: float = 1e-6
    tol_residual: float = 1e-10
    max_iter: int = 25
    damping: float = 0.5
    polish: bool = True

    # Continuation
    initial_step: float = 1e-3
    grow: float = 1.5
    shrink: float = 0.5
    min_step: float = 1e-7
    max_b_step: float = 0.05
    max_failures: int = 12
    family_tol: float = 1e-9
    gap_tol: float = 1e-8
    both_directions: bool = False

    # Verification / classification / output
    verify_tol: float = 1e-8
    choreography_tol: float = 1e-6
    output_dt: float = 0.01
    out: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="HIPHOP_",
        case_sensitive=False,
        extra="forbid",
    )

    @field_validator("N")
    @classmethod
    def check_n(cls, v):
        if v < 1:
            raise ValueError("N must be >= 1")
        return v

    @field_validator("m", "r0", "verify_tol", "choreography_tol", "output_dt", "tol_residual")
    @classmethod
    def check_positive(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("rel_tol", "abs_tol")
    @classmethod
    def check_tolerance(cls, v):
        if not 0 < v <= 1e-2:
            raise ValueError("must lie in (0, 1e-2]")
        return v

    @field_validator("fd_step")
    @classmethod
    def check_fd_step(cls, v):
        if not 0 < v < 1e-2:
            raise ValueError("must lie in (0, 1e-2)")
        return v

    @field_validator("max_steps", "max_iter", "max_failures")
    @classmethod
    def check_count(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    def problem_params(self) -> ProblemParams:
        return ProblemParams(N=self.N, m=self.m, r0=self.r0)

    def integrator_options(self) -> IntegratorOptions:
        return IntegratorOptions(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_step=self.max_step,
            max_steps=self.max_steps,
            r_min=self.r_min,
        )

    def newton_options(self) -> NewtonOptions:
        return NewtonOptions(
            fd_step=self.fd_step,
            tol_residual=self.tol_residual,
            max_iter=self.max_iter,
            damping=self.damping,
        )

    def step_options(self) -> StepOptions:
        return StepOptions(
            initial_step=self.initial_step,
            grow=self.grow,
            shrink=self.shrink,
            min_step=self.min_step,
            max_step=self.max_b_step,
            max_failures=self.max_failures,
            family_tol=self.family_tol,
            gap_tol=self.gap_tol,
            both_directions=self.both_directions,
        )


def _field_lookup() -> dict[str, str]:
    return {name.lower(): name for name in RunConfig.model_fields}


def _key_lines(path: Path) -> dict[str, int]:
    """Line number of each key in a `key = value` file."""
    lines = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key = stripped.split("=", 1)[0].strip()
        if key.startswith("export "):
            key = key[len("export "):].strip()
        lines[key.lower().replace("-", "_")] = number
    return lines


def read_config_file(path: Path) -> tuple[dict[str, Any], dict[str, int]]:
    """Values and line numbers from a flat `key = value` config file."""
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    lookup = _field_lookup()
    lines = _key_lines(path)
    values = {}
    for raw_key, value in dotenv_values(path, encoding="utf-8").items():
        key = raw_key.lower().replace("-", "_")
        if key not in lookup:
            raise ConfigError("unknown configuration key", field=raw_key, line=lines.get(key))
        if value is None:
            raise ConfigError("missing value", field=raw_key, line=lines.get(key))
        values[lookup[key]] = value
    return values, {lookup[k]: n for k, n in lines.items() if k in lookup}


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Defaults < HIPHOP_* environment < config file < overrides (CLI flags)."""
    path = path or os.environ.get(CONFIG_ENV_VAR) or None
    file_values: dict[str, Any] = {}
    file_lines: dict[str, int] = {}
    if path:
        file_values, file_lines = read_config_file(Path(path))

    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    merged = {**file_values, **flags}
    try:
        return RunConfig(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first.get("loc") else ""
        line = file_lines.get(field) if field in file_values and field not in flags else None
        raise ConfigError(first.get("msg", str(e)), field=field, line=line) from e
