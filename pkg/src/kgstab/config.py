"""Scenario files: TOML parsing and validation.

Every key is checked before any computation starts. Unknown keys are hard
errors with a close-match suggestion; syntax errors carry line and column;
semantic errors carry the dotted key path.
"""

from __future__ import annotations

import difflib
import math
import sys
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import damping as dmp
from .evolution import DEFAULT_DENSE_CAP
from .spectral import TorusGrid

SCHEMA_VERSION = "1.0"
ANALYSES = ("simulate", "resolvent_sweep", "annihilation", "gcc_check", "classify")


class ConfigError(ValueError):
    """Invalid scenario file; ``kind`` is ``syntax``, ``semantic`` or ``io``."""

    def __init__(self, message: str, kind: str = "semantic", path: str | None = None):
        super().__init__(message)
        self.kind = kind
        self.path = path


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ---------------------------------------------------------------------------
# grid and damping
# ---------------------------------------------------------------------------


class GridConfig(_Strict):
    d: Literal[1, 2]
    L: float = Field(gt=0, allow_inf_nan=False)
    N: int = Field(ge=4)

    @field_validator("N")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("N must be even")
        return v

    def build(self) -> TorusGrid:
        return TorusGrid(self.d, self.L, self.N)


class BallConfig(_Strict):
    center: list[float]
    radius: float = Field(gt=0)

    def build(self) -> dmp.Ball:
        return dmp.Ball(tuple(self.center), self.radius)


class BoxConfig(_Strict):
    lo: list[float]
    hi: list[float]

    def build(self) -> dmp.Box:
        return dmp.Box(tuple(self.lo), tuple(self.hi))


def _shapes(balls: list[BallConfig], boxes: list[BoxConfig]) -> tuple:
    return tuple(b.build() for b in balls) + tuple(b.build() for b in boxes)


class ConstantDamping(_Strict):
    kind: Literal["constant"]
    level: float = Field(ge=0, allow_inf_nan=False)

    def build(self, d: int) -> dmp.DampingSpec:
        return dmp.Constant(self.level)


class IndicatorComplementDamping(_Strict):
    kind: Literal["indicator_complement"]
    level: float = Field(gt=0, allow_inf_nan=False)
    balls: list[BallConfig] = []
    boxes: list[BoxConfig] = []

    def build(self, d: int) -> dmp.DampingSpec:
        return dmp.IndicatorComplement(_shapes(self.balls, self.boxes), self.level)


class PeriodicDamping(_Strict):
    kind: Literal["periodic"]
    level: float = Field(gt=0, allow_inf_nan=False)
    cell: float = Field(gt=0, allow_inf_nan=False)
    balls: list[BallConfig] = []
    boxes: list[BoxConfig] = []
    damp_inside: bool = True

    def build(self, d: int) -> dmp.DampingSpec:
        return dmp.PeriodicPattern(self.cell, _shapes(self.balls, self.boxes), self.level, self.damp_inside)


class SmoothBumpDamping(_Strict):
    kind: Literal["smooth_bump"]
    base: float = Field(gt=0, allow_inf_nan=False)
    dips: list[BallConfig] = Field(min_length=1)

    def build(self, d: int) -> dmp.DampingSpec:
        return dmp.SmoothBump(self.base, tuple(b.build() for b in self.dips))


class PresetDamping(_Strict):
    kind: Literal["preset"]
    name: Literal[dmp.PRESETS]  # type: ignore[valid-type]
    level: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    radius: float | None = Field(default=None, gt=0)
    period: float | None = Field(default=None, gt=0)
    width: float | None = Field(default=None, gt=0)

    def build(self, d: int) -> dmp.DampingSpec:
        kw = {k: v for k, v in (("radius", self.radius), ("period", self.period), ("width", self.width)) if v is not None}
        return dmp.preset(self.name, d, level=self.level, **kw)


DampingConfig = Annotated[
    Union[ConstantDamping, IndicatorComplementDamping, PeriodicDamping, SmoothBumpDamping, PresetDamping],
    Field(discriminator="kind"),
]


# ---------------------------------------------------------------------------
# analyses
# ---------------------------------------------------------------------------


class SimulateConfig(_Strict):
    T: float = Field(default=20.0, gt=0, allow_inf_nan=False)
    n: int = Field(default=201, ge=8)
    method: Literal["dense_expm", "strang_split"] = "dense_expm"
    dt: float = Field(default=1e-2, gt=0)
    smooth: bool = False
    initial: Literal["random", "gaussian"] = "random"
    smoothness: float = Field(default=1.0, ge=0)
    width: float = Field(default=1.0, gt=0)
    window: tuple[float, float] | None = None

    @model_validator(mode="after")
    def _window(self) -> "SimulateConfig":
        if self.window is not None:
            lo, hi = self.window
            if not (0 <= lo < hi <= self.T):
                raise ValueError("window must satisfy 0 <= lo < hi <= T")
        return self


class SweepConfig(_Strict):
    kind: Literal["full_A", "halfwave", "one_sided", "two_sided"] = "halfwave"
    lam_max: float = Field(default=10.0, gt=0, allow_inf_nan=False)
    n_points: int = Field(default=41, ge=2)
    mu: float = Field(default=1.0, gt=0)
    epsilon: float = Field(default=0.5, gt=0)
    method: Literal["auto", "dense_svd", "iterative"] = "auto"


class AnnihilationConfig(_Strict):
    epsilon: float = Field(default=0.5, gt=0)
    mu: float = Field(default=1.0, gt=0)
    lam_max: float = Field(default=10.0, gt=0, allow_inf_nan=False)
    n_points: int = Field(default=21, ge=2)
    method: Literal["auto", "dense_svd", "iterative"] = "auto"


class GccConfig(_Strict):
    epsilons: list[float] = Field(default=[0.01, 0.1, 0.5], min_length=1)
    radius: float = Field(default=1.0, gt=0)
    length: float = Field(default=5.0, gt=0)
    margin: float | None = Field(default=None, gt=0)
    centers_per_axis: int = Field(default=32, ge=2)
    offsets_per_axis: int = Field(default=32, ge=2)
    directions: int = Field(default=64, ge=1)
    quad_points: int = Field(default=128, ge=2)

    @field_validator("epsilons")
    @classmethod
    def _positive(cls, v: list[float]) -> list[float]:
        if any(not (e > 0 and math.isfinite(e)) for e in v):
            raise ValueError("every epsilon must be positive and finite")
        return sorted(set(v))


Tri = Literal["holds", "fails", "unknown"]


class FactOverrides(_Strict):
    zero: Tri | None = None
    one: Tri | None = None
    dd: Tri | None = None
    margin_one: Tri | None = None
    finite_measure_sublevel: bool | None = None
    periodic_superset: bool | None = None
    uniformly_continuous: bool | None = None
    continuous: bool | None = None


class ClassifyConfig(_Strict):
    derive_structure: bool = True
    facts: FactOverrides = FactOverrides()


class Scenario(_Strict):
    name: str = Field(min_length=1)
    seed: int = Field(default=0, ge=0)
    workers: int | None = Field(default=None, ge=1)
    output: str = "kgstab-out"
    grid: GridConfig
    s: list[float]
    damping: DampingConfig
    analyses: list[Literal[ANALYSES]] = Field(min_length=1)  # type: ignore[valid-type]
    simulate: SimulateConfig = SimulateConfig()
    resolvent_sweep: SweepConfig = SweepConfig()
    annihilation: AnnihilationConfig = AnnihilationConfig()
    gcc_check: GccConfig = GccConfig()
    classify: ClassifyConfig = ClassifyConfig()
    dense_cap: int = Field(default=DEFAULT_DENSE_CAP, ge=16)

    @field_validator("s", mode="before")
    @classmethod
    def _orders(cls, v: Any) -> list[float]:
        vals = v if isinstance(v, list) else [v]
        if not vals:
            raise ValueError("give at least one order")
        out = []
        for x in vals:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValueError(f"order must be a number, got {x!r}")
            if not (math.isfinite(x) and x > 0):
                raise ValueError(f"order must be positive and finite, got {x}")
            out.append(float(x))
        return out

    @field_validator("analyses")
    @classmethod
    def _unique(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError("analyses listed twice")
        return v

    @model_validator(mode="after")
    def _cross(self) -> "Scenario":
        d = self.grid.d
        try:
            spec = self.damping.build(d)
        except ValueError as exc:
            raise ValueError(f"damping: {exc}") from None
        if spec.dim is not None and spec.dim != d:
            raise ValueError(f"damping: shapes are {spec.dim}-dimensional but grid.d = {d}")
        cell = getattr(spec, "cell", None)
        if cell is not None:
            ratio = self.grid.L / cell
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"damping: period {cell} must divide grid.L = {self.grid.L}")
        if "simulate" in self.analyses and self.simulate.method == "dense_expm":
            if 2 * self.grid.N**d > self.dense_cap:
                raise ValueError(
                    f"simulate.method: dense_expm needs 2*N^d = {2 * self.grid.N**d} <= dense_cap = {self.dense_cap}"
                )
        if "gcc_check" in self.analyses and d == 1 and self.gcc_check.length > self.grid.L:
            raise ValueError("gcc_check.length: segment longer than the box")
        return self

    # builders -----------------------------------------------------------------
    def build_grid(self) -> TorusGrid:
        return self.grid.build()

    def build_damping(self) -> dmp.DampingSpec:
        return self.damping.build(self.grid.d)


# ---------------------------------------------------------------------------
# error reporting
# ---------------------------------------------------------------------------


def _fields_at(model: type[BaseModel], loc: tuple) -> list[str]:
    """Field names of the model reached by following ``loc``; empty when unresolved."""
    current: Any = model
    for part in loc:
        if isinstance(part, int) or current is None:
            continue
        fields = getattr(current, "model_fields", None)
        if fields is None:
            return []
        if part in fields:
            current = _model_of(fields[part].annotation)
        else:
            variant = _variant(current, part)
            if variant is None:
                return []
            current = variant
    return list(getattr(current, "model_fields", {}) or [])


def _model_of(annotation: Any):
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in getattr(annotation, "__args__", ()) or ():
        found = _model_of(arg)
        if found is not None:
            return found
    return None


def _variant(current: Any, tag: str):
    for cls in (ConstantDamping, IndicatorComplementDamping, PeriodicDamping, SmoothBumpDamping, PresetDamping):
        if cls.model_fields["kind"].annotation.__args__[0] == tag:
            return cls
    return None


def _key_path(loc: tuple) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        elif p in ("constant", "indicator_complement", "periodic", "smooth_bump", "preset") and parts == ["damping"]:
            continue
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts) or "<root>"


def format_validation_error(exc: ValidationError) -> list[str]:
    lines = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        path = _key_path(loc)
        if err["type"] == "extra_forbidden":
            known = _fields_at(Scenario, loc[:-1])
            hint = difflib.get_close_matches(str(loc[-1]), known, n=1)
            msg = f"unknown key `{path}`"
            if hint:
                msg += f"; did you mean `{hint[0]}`?"
            lines.append(msg)
        else:
            msg = err["msg"].removeprefix("Value error, ")
            if not loc:
                # cross-field checks name their key as a message prefix
                head, sep, rest = msg.partition(": ")
                if sep and head.replace(".", "").replace("_", "").isalnum():
                    path, msg = head, rest
            lines.append(f"`{path}`: {msg}")
    return lines


def validate(data: dict, source: str = "<config>") -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        lines = format_validation_error(exc)
        raise ConfigError(f"{source}: " + "\n  ".join(lines), "semantic") from None


def parse_text(text: str, source: str = "<config>") -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        where = f"{source}:{line}:{col}" if line is not None else source
        raise ConfigError(f"{where}: syntax error: {getattr(exc, 'msg', exc)}", "syntax") from None
    return validate(data, source)


def parse_config(path: str | Path) -> Scenario:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{p}: cannot read: {exc}", "io", str(p)) from None
    return parse_text(text, str(p))


def json_schema() -> dict:
    return Scenario.model_json_schema()
