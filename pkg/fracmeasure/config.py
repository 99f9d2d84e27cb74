"""Run configuration: presets, flat key=value files and command-line flags."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Sequence, Tuple

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from .errors import ConfigError
from .fem import Density, Measure, PointDirac, WeightedCircle
from .harness import sine_modes
from .spectral import DEFAULT_MAX_DENSE_DIM, FracParams

Command = Literal["solve", "control", "converge", "quadcheck", "eig"]
COMMANDS: Tuple[str, ...] = ("solve", "control", "converge", "quadcheck", "eig")

_PRESETS: Dict[str, Dict[str, Any]] = {
    "paper-circle": {
        "n": 257,
        "s": 0.65,
        "measure": "circle",
        "center": "0.5,0.5",
        "radius": 0.3,
        "weight": 1.0 / (2.0 * math.pi * 0.3),
        "regularization": "ring",
        "eps_factor": 1.0,
        "scheme": "practical",
        "Y": 11.0982,
        "K": 2852,
    },
    "paper-dirac": {
        "n": 257,
        "s": 0.65,
        "measure": "dirac",
        "point": "0.3,0.7",
        "regularization": "disk",
        "eps_factor": 1.0,
        "scheme": "practical",
        "Y": 11.0982,
        "K": 2852,
    },
}


def get_presets() -> Dict[str, Dict[str, Any]]:
    """Experiment presets, stored verbatim (including their Y/K pairs)."""

    return {name: dict(values) for name, values in _PRESETS.items()}


def _floats(value: Any, what: str) -> List[float]:
    if isinstance(value, str):
        parts = [item for item in value.replace(" ", "").split(",") if item]
        try:
            return [float(item) for item in parts]
        except ValueError as exc:
            raise ValueError(f"{what} must be comma-separated numbers") from exc
    return [float(item) for item in value]


def parse_point(value: Any) -> Tuple[float, float]:
    """'x,y' → (x, y)."""

    coords = _floats(value, "point")
    if len(coords) != 2:
        raise ValueError("a point needs exactly two coordinates")
    return coords[0], coords[1]


def parse_points(value: Any) -> List[Tuple[float, float]]:
    """'x1,y1; x2,y2' → [(x1, y1), (x2, y2)]."""

    if isinstance(value, str):
        return [parse_point(chunk) for chunk in value.split(";") if chunk.strip()]
    return [parse_point(item) for item in value]


def parse_modes(value: Any) -> List[Tuple[int, int, float]]:
    """'m,n,c; m,n,c' → sine-mode triples."""

    chunks = value.split(";") if isinstance(value, str) else value
    modes = []
    for chunk in chunks:
        if isinstance(chunk, str) and not chunk.strip():
            continue
        m, n, c = _floats(chunk, "mode") if isinstance(chunk, str) else chunk
        if m != int(m) or n != int(n) or m < 1 or n < 1:
            raise ValueError("mode indices must be positive integers")
        modes.append((int(m), int(n), float(c)))
    return modes


class RunConfig(BaseSettings):
    """Validated configuration for one CLI command."""

    command: Command = Field(..., description="solve | control | converge | quadcheck | eig")
    preset: str | None = Field(default=None, description="paper-circle | paper-dirac")

    n: int = Field(default=64, ge=1, description="structured unit-square subdivisions")
    mesh_file: str | None = Field(default=None, description="ASCII mesh file, overrides n")
    max_dense_dim: int = Field(default=DEFAULT_MAX_DENSE_DIM, ge=1)

    s: float = Field(default=0.65, description="fractional exponent")
    theta: float | None = Field(default=None, description="dual shift, default midpoint of (1-s, s)")

    measure: Literal["dirac", "circle", "density"] | None = None
    point: str | None = Field(default=None, description="Dirac location 'x,y'")
    dirac_weight: float = 1.0
    center: str | None = Field(default=None, description="circle center 'x,y'")
    radius: float | None = Field(default=None, gt=0.0)
    weight: float | None = Field(default=None, description="circle weight per unit arc length")
    modes: str | None = Field(default=None, description="sine-mode density 'm,n,c; ...'")
    density_order: int = Field(default=2, ge=1, le=5)

    scheme: Literal["ideal", "practical"] | None = Field(default=None, description="default: ideal for control, practical otherwise")
    regularization: Literal["mollifier", "disk", "ring", "none"] | None = None
    eps_factor: float = Field(default=1.0, gt=0.0, description="ε = eps_factor · h_grid")
    epsilon: float | None = Field(default=None, gt=0.0, description="absolute ε, overrides eps_factor")
    Y: float | None = Field(default=None, gt=0.0)
    K: int | None = Field(default=None, ge=1)
    c: float = Field(default=2.0, gt=0.0, description="Y = c·s·|ln h| when Y/K are not given")
    tol: float = Field(default=1e-10, gt=0.0, description="inner CG relative tolerance")
    workers: int = Field(default=1, ge=1)
    compare_classical: bool = False

    obs_points: str | None = Field(default=None, description="observation points 'x,y; x,y'")
    targets: str | None = Field(default=None, description="targets 'a,b'")
    alpha: float = Field(default=0.1, gt=0.0)
    lower: float = -5.0
    upper: float = 5.0
    ocp_tol: float = Field(default=1e-10, gt=0.0)
    ocp_maxit: int = Field(default=500, ge=1)
    omega: float | None = Field(default=None, gt=0.0, le=1.0)

    study: Literal["self", "smooth", "regularization"] = "self"
    n_list: str = Field(default="16,32,64", description="mesh levels 'n1,n2,...'")
    reference_n: int | None = Field(default=None, ge=1)
    eps_list: str | None = Field(default=None, description="regularization scales 'e1,e2,...'")

    lambda_min: float = Field(default=19.7, gt=0.0)
    lambda_max: float = Field(default=1e6, gt=0.0)
    lambda_points: int = Field(default=50, ge=2)

    output_vtk: str | None = None
    output_csv: str | None = None
    output_xlsx: str | None = None
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(extra="forbid", case_sensitive=True, validate_default=True)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @field_validator("point", "center")
    @classmethod
    def _check_point(cls, value: str | None) -> str | None:
        if value is not None:
            parse_point(value)
        return value

    @field_validator("obs_points")
    @classmethod
    def _check_points(cls, value: str | None) -> str | None:
        if value is not None:
            parse_points(value)
        return value

    @field_validator("modes")
    @classmethod
    def _check_modes(cls, value: str | None) -> str | None:
        if value is not None and not parse_modes(value):
            raise ValueError("at least one mode is required")
        return value

    @field_validator("n_list", "targets", "eps_list")
    @classmethod
    def _check_numbers(cls, value: str | None) -> str | None:
        if value is not None:
            _floats(value, "list")
        return value

    @field_validator("log_level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        level = value.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return level

    @model_validator(mode="after")
    def _cross_checks(self) -> "RunConfig":
        if self.command == "quadcheck":
            # the scalar rule is defined on all of (0, 1)
            if not 0.0 < self.s < 1.0:
                raise ValueError("s: must lie in (0, 1)")
        else:
            try:
                FracParams(s=self.s, theta=self.theta)
            except ValidationError as exc:
                key = "theta" if "theta=" in str(exc) else "s"
                raise ValueError(f"{key}: {exc.errors()[0]['msg'].removeprefix('Value error, ')}") from None
        if self.preset is not None and self.preset not in _PRESETS:
            raise ValueError(f"preset: unknown preset {self.preset!r}")
        if self.command in ("solve", "converge") and not (self.command == "converge" and self.study == "smooth"):
            self._check_measure()
        if self.command == "control":
            if not self.lower < self.upper:
                raise ValueError("lower: lower bound must be smaller than upper bound")
            if self.obs_points is None or self.targets is None:
                raise ValueError("obs_points: observation points and targets are required")
            if len(parse_points(self.obs_points)) != len(_floats(self.targets, "targets")):
                raise ValueError("targets: one target per observation point is required")
        if self.command == "converge" and self.study != "regularization" and self.mesh_file is not None:
            raise ValueError(f"mesh_file: the {self.study} study runs on nested unit-square meshes only")
        if self.lambda_min >= self.lambda_max:
            raise ValueError("lambda_min: must be smaller than lambda_max")
        if (self.Y is None) != (self.K is None):
            raise ValueError("Y: Y and K must be given together")
        return self

    def _check_measure(self) -> None:
        given = [
            kind
            for kind, present in (
                ("dirac", self.point is not None),
                ("circle", self.center is not None or self.radius is not None),
                ("density", self.modes is not None),
            )
            if present
        ]
        kind = self.measure
        if kind is None:
            if len(given) != 1:
                raise ValueError("measure: exactly one measure (point, center/radius or modes) is required")
            kind = given[0]
        elif any(other != kind for other in given):
            raise ValueError(f"measure: keys for another measure given with measure={kind}")
        if kind == "dirac" and self.point is None:
            raise ValueError("point: a Dirac measure needs a location")
        if kind == "circle" and (self.center is None or self.radius is None):
            raise ValueError("center: a circle measure needs center and radius")
        if kind == "density" and self.modes is None:
            raise ValueError("modes: a density needs sine modes")
        allowed = {"dirac": ("mollifier", "disk"), "circle": ("mollifier", "ring"), "density": ("none",)}[kind]
        if self.regularization is not None and self.regularization not in allowed:
            raise ValueError(f"regularization: {self.regularization} does not apply to a {kind} measure")
        self.measure = kind

    def frac_params(self) -> FracParams:
        return FracParams(s=self.s, theta=self.theta)

    def measure_object(self) -> Measure:
        if self.measure == "dirac":
            return PointDirac(parse_point(self.point), self.dirac_weight)
        if self.measure == "circle":
            center = parse_point(self.center)
            if self.weight is None:
                return WeightedCircle.normalized(center, self.radius)
            return WeightedCircle(center, self.radius, self.weight)
        if self.measure == "density":
            return Density(sine_modes(parse_modes(self.modes)), order=self.density_order)
        raise ConfigError("measure", "no measure configured")

    @property
    def effective_scheme(self) -> str:
        if self.scheme is not None:
            return self.scheme
        return "ideal" if self.command == "control" else "practical"

    @property
    def regularization_kind(self) -> str | None:
        if self.regularization in (None, "none") or self.measure == "density":
            return None
        return self.regularization

    @property
    def n_values(self) -> List[int]:
        return [int(v) for v in _floats(self.n_list, "n_list")]

    @property
    def eps_values(self) -> List[float]:
        return _floats(self.eps_list, "eps_list") if self.eps_list else []

    @property
    def observation_points(self) -> List[Tuple[float, float]]:
        return parse_points(self.obs_points) if self.obs_points else []

    @property
    def target_values(self) -> List[float]:
        return _floats(self.targets, "targets") if self.targets else []


def normalize_key(key: str) -> str:
    """Case-insensitive keys with dashes read as underscores; Y and K stay upper case."""

    key = key.strip().lstrip("-").replace("-", "_").lower()
    return key.upper() if key in ("y", "k") else key


def _normalized(values: Mapping[str, Any]) -> Dict[str, Any]:
    return {normalize_key(key): value for key, value in values.items()}


def parse_flags(args: Sequence[str]) -> Dict[str, str]:
    """['--key', 'value', '--flag=value'] → {'key': 'value', 'flag': 'value'}."""

    flags: Dict[str, str] = {}
    items = list(args)
    i = 0
    while i < len(items):
        token = items[i]
        if not token.startswith("--") or token == "--":
            raise ConfigError(token, "expected --key value")
        if "=" in token:
            key, value = token[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(items):
                raise ConfigError(token[2:], "missing value")
            key, value = token[2:], items[i + 1]
            i += 2
        flags[key] = value
    return flags


def read_config_file(path: str | Path) -> Dict[str, Any]:
    """Flat key=value file; blank lines and '#' comments are ignored."""

    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"cannot read {path}")
    values = dotenv_values(path)
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError(missing[0], "key without value")
    return dict(values)


def _config_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    key = ".".join(str(part) for part in error["loc"])
    reason = error["msg"].removeprefix("Value error, ")
    if not key and ": " in reason:
        key, reason = reason.split(": ", 1)
    return ConfigError(key or "config", reason)


def parse_config(
    command: str,
    *,
    config_file: str | Path | None = None,
    flags: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Merge preset < config file < flags and validate."""

    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    from_file = _normalized(read_config_file(config_file)) if config_file is not None else {}
    from_flags = _normalized(flags or {})
    preset_name = from_flags.get("preset", from_file.get("preset"))
    merged: Dict[str, Any] = {}
    if preset_name is not None:
        if preset_name not in _PRESETS:
            raise ConfigError("preset", f"unknown preset {preset_name!r}")
        merged.update(_PRESETS[preset_name])
    merged.update(from_file)
    merged.update(from_flags)
    merged["command"] = command
    try:
        return RunConfig(**merged)
    except ValidationError as exc:
        raise _config_error(exc) from None
