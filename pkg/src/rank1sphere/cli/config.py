"""Versioned JSON experiment configs, validated fail-closed."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, TypeAdapter, ValidationError,
                      field_validator, model_validator)

from ..theory.paths import PathMode

SCHEMA_VERSION = 1
U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` holds one human-readable line per problem."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = diagnostics


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Linspace(_Strict):
    """``{"linspace": [start, stop, count]}``, endpoints included."""

    linspace: tuple[float, float, int]

    @field_validator("linspace")
    @classmethod
    def _count(cls, v):
        if v[2] < 1:
            raise ValueError("count must be >= 1")
        return v

    def values(self) -> list[float]:
        start, stop, count = self.linspace
        return [float(x) for x in np.linspace(start, stop, count)]


RangeSpec = Union[float, list[float], Linspace]


def expand(spec: RangeSpec) -> list[float]:
    if isinstance(spec, Linspace):
        return spec.values()
    if isinstance(spec, list):
        return [float(x) for x in spec]
    return [float(spec)]


def _check_range(v: RangeSpec, lo: float = 0.0) -> RangeSpec:
    vals = expand(v)
    if not vals:
        raise ValueError("range must be nonempty")
    if any(not np.isfinite(x) or x < lo for x in vals):
        raise ValueError(f"range values must be finite and >= {lo}")
    return v


PositiveFloat = Annotated[float, Field(gt=0, allow_inf_nan=False)]


class ThetaSpec(_Strict):
    lam: RangeSpec
    alpha_u: PositiveFloat = 1.0
    alpha_v: PositiveFloat = 1.0
    rho_u: PositiveFloat = 1.0
    rho_v: PositiveFloat = 1.0

    @field_validator("lam")
    @classmethod
    def _lam(cls, v):
        return _check_range(v)

    def lambdas(self) -> list[float]:
        return expand(self.lam)


class GibbsSpec(_Strict):
    burn_in: int = Field(500, ge=1)
    n_samples: int = Field(4000, ge=20)
    thinning: int = Field(2, ge=1)
    init: Literal["random", "planted"] = "random"


class SpectralSpec(_Strict):
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(100_000, ge=1)


class _Base(_Strict):
    schema_version: Literal[1]
    seed: int | None = Field(None, ge=0, le=U64_MAX)
    jobs: int | None = Field(None, ge=1)
    output: str | None = None


def _single_lambda(theta: ThetaSpec) -> ThetaSpec:
    if len(theta.lambdas()) != 1:
        raise ValueError("theta.lam must be a single value for this experiment")
    return theta


class TheoryCurveConfig(_Base):
    kind: Literal["TheoryCurve"]
    theta: ThetaSpec


class McSweepConfig(_Base):
    kind: Literal["McSweep"]
    theta: ThetaSpec
    n: list[Annotated[int, Field(ge=2)]] = Field(min_length=1)
    reps: int = Field(ge=1)
    estimators: list[Literal["gibbs", "spectral"]] = Field(["gibbs"], min_length=1)
    gibbs: GibbsSpec = GibbsSpec()
    spectral: SpectralSpec = SpectralSpec()


class ConcentrationConfig(_Base):
    kind: Literal["Concentration"]
    theta: ThetaSpec
    n: list[Annotated[int, Field(ge=50)]] = Field(min_length=1)
    reps: int = Field(ge=4)
    gibbs: GibbsSpec = GibbsSpec()

    @field_validator("theta")
    @classmethod
    def _one_lambda(cls, v: ThetaSpec):
        return _single_lambda(v)


class Lemma1Config(_Base):
    kind: Literal["Lemma1"]
    n: list[Annotated[int, Field(ge=2)]] = Field(min_length=1)
    m: RangeSpec
    samples: int = Field(2000, ge=2)

    @field_validator("m")
    @classmethod
    def _m(cls, v):
        return _check_range(v)


class InterpolationPathConfig(_Base):
    kind: Literal["InterpolationPath"]
    theta: ThetaSpec
    epsilon: list[tuple[Annotated[float, Field(ge=0)], Annotated[float, Field(ge=0)]]] = Field(
        [(0.0, 0.0)], min_length=1)
    modes: list[PathMode] = Field([PathMode.LOWER_BOUND, PathMode.UPPER_BOUND], min_length=1)
    oracle: Literal["state_evolution", "constant", "gibbs"] = "state_evolution"
    oracle_value: float | None = Field(None, ge=0)
    m_u_const: float | None = Field(None, ge=0)
    steps: int = Field(200, ge=1)
    gibbs_n: int = Field(100, ge=2)
    gibbs_reps: int = Field(4, ge=1)
    gibbs: GibbsSpec = GibbsSpec(burn_in=20, n_samples=200, thinning=1, init="planted")

    @field_validator("theta")
    @classmethod
    def _one_lambda(cls, v: ThetaSpec):
        return _single_lambda(v)

    @model_validator(mode="after")
    def _constant(self):
        if self.oracle == "constant" and self.oracle_value is None:
            raise ValueError("oracle_value is required when oracle is 'constant'")
        return self


class ThermoConfig(_Base):
    kind: Literal["ThermoIntegration"]
    theta: ThetaSpec
    n: int = Field(ge=2)
    reps: int = Field(ge=2)
    gibbs: GibbsSpec = GibbsSpec()

    @field_validator("theta")
    @classmethod
    def _grid(cls, v: ThetaSpec):
        grid = v.lambdas()
        if grid[0] != 0.0:
            raise ValueError("lambda grid must start at 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda grid must be strictly increasing")
        return v


ExperimentConfig = Annotated[
    Union[TheoryCurveConfig, McSweepConfig, ConcentrationConfig, Lemma1Config,
          InterpolationPathConfig, ThermoConfig],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(ExperimentConfig)


def _line_of(text: str, key: str) -> int | None:
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def parse_config(text: str, source: str = "<config>"):
    """Parse and validate; raise ``ConfigError`` with ``source:line: field: message`` lines."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"{source}:1: top level must be a JSON object"])
    if raw.get("schema_version") != SCHEMA_VERSION:
        line = _line_of(text, "schema_version") or 1
        raise ConfigError([f"{source}:{line}: schema_version: expected {SCHEMA_VERSION}, "
                           f"got {raw.get('schema_version')!r}"])
    try:
        return _ADAPTER.validate_python(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            # drop the discriminator tag pydantic prepends to union locations
            loc = [p for p in err["loc"] if p != raw.get("kind")]
            field = ".".join(str(p) for p in loc) or "<root>"
            keys = [p for p in loc if isinstance(p, str)]
            line = _line_of(text, keys[-1]) if keys else None
            lines.append(f"{source}:{line or 1}: {field}: {err['msg']}")
        raise ConfigError(lines) from exc


def load_config(path: Path | str):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config: {exc.strerror}"]) from exc
    return parse_config(text, str(path))


def config_hash(config) -> str:
    """SHA-256 of the canonical JSON of every field that affects results."""
    payload = config.model_dump(mode="json", exclude={"jobs", "output"})
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
