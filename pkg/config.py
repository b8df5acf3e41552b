"""Run configuration: defaults < config file < ISORK_SEED < command-line flags.

Config files are flat `key = value` lines. `#` starts a comment, blank lines
are ignored and arrays are comma lists:

    system = rigidbody
    method = custom
    custom_b = 0.5, 0.5
    h = 0.01
"""
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ValidationError, root_validator, validator

from errors import ConfigError
from integrator import StepperConfig
from tableau import SdirkTableau, builtin, parse_custom

SEED_ENV = "ISORK_SEED"
LIST_FIELDS = ("custom_b", "inertia")


class RunConfig(BaseModel):
    system: Literal["rigidbody", "toda", "zeitlin"] = "rigidbody"
    method: Literal["midpoint", "sdirk2", "yoshida4", "suzuki4", "custom"] = "midpoint"
    custom_b: Optional[List[float]] = None
    h: float = 0.01
    steps: int = 1000
    seed: int = 42
    variant: Literal["left", "right"] = "left"
    update_form: Literal["conjugation", "dcay"] = "conjugation"
    solver_tol: float = 1e-13
    solver_max_iters: int = 200
    root_fallback: bool = True
    n: int = 4
    N: int = 17
    inertia: List[float] = [1.0, 2.0, 3.0]
    init_scale: float = 1.0
    rigid_init: Literal["random", "tumbling"] = "random"
    toda_init: Literal["alternating", "random"] = "alternating"
    laplacian_mode: Literal["inverse", "forward"] = "inverse"
    out: str = "trajectory.csv"
    workers: int = 1
    store: bool = False

    class Config:
        extra = "forbid"

    @validator("h", "solver_tol", "init_scale")
    def _positive(cls, v, field):
        if not v > 0:
            raise ValueError(f"{field.name} must be positive")
        return v

    @validator("steps", "solver_max_iters", "workers")
    def _at_least_one(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be >= 1")
        return v

    @validator("n")
    def _toda_size(cls, v):
        if v < 3:
            raise ValueError("n must be >= 3")
        return v

    @validator("N")
    def _zeitlin_size(cls, v):
        if v < 2:
            raise ValueError("N must be >= 2")
        return v

    @validator("inertia")
    def _inertia_shape(cls, v):
        if len(v) not in (3, 9):
            raise ValueError("inertia takes 3 principal moments or 9 matrix entries")
        return v

    @root_validator(skip_on_failure=True)
    def _custom_needs_weights(cls, values):
        if values["method"] == "custom" and not values.get("custom_b"):
            raise ValueError("method=custom requires custom_b")
        return values

    def tableau(self) -> SdirkTableau:
        if self.method == "custom":
            return parse_custom(self.custom_b)
        return builtin(self.method)

    def stepper(self) -> StepperConfig:
        return StepperConfig(variant=self.variant, update_form=self.update_form, solver_tol=self.solver_tol,
                             solver_max_iters=self.solver_max_iters, root_fallback=self.root_fallback,
                             tableau=self.tableau())


def _coerce(key: str, raw: str) -> Any:
    if key in LIST_FIELDS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def _validation_error(e: ValidationError, lines: Dict[str, int]) -> ConfigError:
    err = e.errors()[0]
    field = str(err["loc"][0]) if err["loc"] and err["loc"][0] != "__root__" else None
    return ConfigError(err["msg"], line=lines.get(field) if field else None, field=field)


def parse_config_text(text: str, overrides: Optional[Dict[str, Any]] = None,
                      env: Optional[Dict[str, str]] = None) -> RunConfig:
    """Parse the flat config grammar, then apply ISORK_SEED and `overrides` (flags) on top."""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.__fields__:
            raise ConfigError("unknown key", line=lineno, field=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, field=key)
        values[key] = _coerce(key, raw)
        lines[key] = lineno

    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        values["seed"] = env[SEED_ENV]
        lines.pop("seed", None)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
            lines.pop(key, None)

    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise _validation_error(e, lines) from None


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                env: Optional[Dict[str, str]] = None) -> RunConfig:
    text = Path(path).read_text() if path else ""
    return parse_config_text(text, overrides=overrides, env=env)


def dump_config(cfg: RunConfig) -> str:
    out = []
    for key, value in cfg.dict().items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ", ".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        elif isinstance(value, bool):
            value = str(value).lower()
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"
