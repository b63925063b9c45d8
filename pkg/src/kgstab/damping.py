"""Damping coefficients a(x) >= 0 and their sublevel sets {a < eps}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectral import TorusGrid


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Closed ball."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x: np.ndarray) -> np.ndarray:
        diff = np.asarray(x, float) - np.asarray(self.center)
        return np.sum(diff * diff, axis=-1) <= self.radius**2

    def max_extent(self) -> float:
        return float(np.max(np.abs(self.center)) + self.radius)


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lo, hi]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners have different dimensions")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box needs lo < hi componentwise, got {self.lo}, {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=-1)

    def max_extent(self) -> float:
        return float(max(np.max(np.abs(self.lo)), np.max(np.abs(self.hi))))


Shape = Ball | Box


def _union(shapes: Sequence[Shape], x: np.ndarray) -> np.ndarray:
    inside = np.zeros(np.asarray(x).shape[:-1], dtype=bool)
    for sh in shapes:
        inside |= sh.contains(x)
    return inside


def _check_dims(shapes: Sequence[Shape]) -> int | None:
    dims = {sh.dim for sh in shapes}
    if len(dims) > 1:
        raise ValueError(f"shapes mix dimensions {sorted(dims)}")
    return dims.pop() if dims else None


# ---------------------------------------------------------------------------
# damping variants
# ---------------------------------------------------------------------------


class DampingSpec:
    """Base class. Subclasses implement ``_values(points)`` and ``bound``."""

    dim: int | None = None

    @property
    def bound(self) -> float:
        raise NotImplementedError

    def _values(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, grid: TorusGrid) -> np.ndarray:
        """Values at the grid nodes, shape ``grid.shape``."""
        self._check_grid_dim(grid.d)
        return self._values(grid.nodes)

    def _check_grid_dim(self, d: int) -> None:
        if self.dim is not None and self.dim != d:
            raise ValueError(f"damping is {self.dim}-dimensional but grid has d={d}")

    # Structural facts used by the classifier. None means "not known".
    def bounded_sublevel(self) -> bool | None:
        return None

    def periodic_sublevel(self) -> bool | None:
        return None

    def uniformly_continuous(self) -> bool | None:
        return None

    def two_valued(self) -> bool:
        """True when a takes only the values 0 and one positive level."""
        return False


@dataclass(frozen=True)
class Constant(DampingSpec):
    level: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.level) and self.level >= 0):
            raise ValueError(f"constant damping must be finite and >= 0, got {self.level}")

    @property
    def bound(self) -> float:
        return float(self.level)

    def _values(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(x).shape[:-1], float(self.level))

    def bounded_sublevel(self) -> bool:
        return self.level > 0

    def periodic_sublevel(self) -> bool:
        # The empty set sits inside any closed proper periodic set.
        return self.level > 0

    def uniformly_continuous(self) -> bool:
        return True


@dataclass(frozen=True)
class IndicatorComplement(DampingSpec):
    """``a = level`` outside the union of closed shapes and 0 inside."""

    shapes: tuple[Shape, ...]
    level: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.shapes:
            raise ValueError("IndicatorComplement needs at least one shape")
        if not (np.isfinite(self.level) and self.level > 0):
            raise ValueError(f"level must be positive and finite, got {self.level}")
        object.__setattr__(self, "dim", _check_dims(self.shapes))

    @property
    def bound(self) -> float:
        return float(self.level)

    def _values(self, x: np.ndarray) -> np.ndarray:
        return np.where(_union(self.shapes, x), 0.0, float(self.level))

    def bounded_sublevel(self) -> bool:
        return True

    def periodic_sublevel(self) -> bool:
        # A bounded set fits inside a sparse periodic array of large balls.
        return True

    def uniformly_continuous(self) -> bool:
        return False

    def two_valued(self) -> bool:
        return True


@dataclass(frozen=True)
class PeriodicPattern(DampingSpec):
    """Shapes repeated on the lattice ``cell * Z^d``.

    Shapes are given in cell coordinates centred at the origin, i.e. ``x mod cell``
    mapped into ``[-cell/2, cell/2)``. With ``damp_inside`` the damping equals
    ``level`` on the shapes and 0 elsewhere; otherwise the reverse.
    """

    cell: float
    shapes: tuple[Shape, ...]
    level: float
    damp_inside: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.cell > 0:
            raise ValueError(f"cell length must be positive, got {self.cell}")
        if not self.shapes:
            raise ValueError("PeriodicPattern needs at least one shape")
        if not (np.isfinite(self.level) and self.level > 0):
            raise ValueError(f"level must be positive and finite, got {self.level}")
        object.__setattr__(self, "dim", _check_dims(self.shapes))

    @property
    def bound(self) -> float:
        return float(self.level)

    def cell_coords(self, x: np.ndarray) -> np.ndarray:
        c = self.cell
        return np.mod(np.asarray(x, float) + c / 2, c) - c / 2

    def _values(self, x: np.ndarray) -> np.ndarray:
        inside = _union(self.shapes, self.cell_coords(x))
        on = inside if self.damp_inside else ~inside
        return np.where(on, float(self.level), 0.0)

    def bounded_sublevel(self) -> bool:
        return False

    def periodic_sublevel(self) -> bool:
        return True

    def uniformly_continuous(self) -> bool:
        return False

    def two_valued(self) -> bool:
        return True


def _dip_profile(rho: np.ndarray) -> np.ndarray:
    """Smooth compactly supported profile with value 1 at 0 and support [0, 1)."""
    out = np.zeros_like(rho)
    inner = rho < 1
    out[inner] = np.exp(1.0 - 1.0 / (1.0 - rho[inner] ** 2))
    return out


@dataclass(frozen=True)
class SmoothBump(DampingSpec):
    """``base * prod(1 - profile(|x - c| / r))``: smooth, vanishing at each dip centre."""

    base: float
    dips: tuple[Ball, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dips", tuple(self.dips))
        if not (np.isfinite(self.base) and self.base > 0):
            raise ValueError(f"base level must be positive and finite, got {self.base}")
        object.__setattr__(self, "dim", _check_dims(self.dips))

    @property
    def bound(self) -> float:
        return float(self.base)

    def _values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, float)
        val = np.full(x.shape[:-1], float(self.base))
        for dip in self.dips:
            rho = np.sqrt(np.sum((x - np.asarray(dip.center)) ** 2, axis=-1)) / dip.radius
            val = val * (1.0 - _dip_profile(rho))
        return val

    def bounded_sublevel(self) -> bool:
        return True

    def periodic_sublevel(self) -> bool:
        return True

    def uniformly_continuous(self) -> bool:
        return True


@dataclass(frozen=True)
class GridSampled(DampingSpec):
    """Nonnegative values on a torus grid; evaluation uses the nearest node."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values shape {arr.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("grid-sampled damping must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "dim", self.grid.d)

    @property
    def bound(self) -> float:
        return float(np.max(self.values))

    def _values(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        idx = np.rint((np.asarray(x, float) + g.L / 2) / g.spacing).astype(int) % g.N
        return self.values[tuple(np.moveaxis(idx, -1, 0))]

    def sample(self, grid: TorusGrid) -> np.ndarray:
        if grid == self.grid:
            return np.array(self.values)
        return super().sample(grid)


# ---------------------------------------------------------------------------
# evaluation and sublevel sets
# ---------------------------------------------------------------------------


def evaluate(spec: DampingSpec, x, box: float | None = None) -> np.ndarray | float:
    """Pointwise value of the damping.

    When ``box`` is given, points outside ``[-box/2, box/2]^d`` are rejected for
    symbolic variants. Grid-sampled specs always wrap to the nearest node.
    """
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 0
    if scalar:
        pts = pts.reshape(1)
    if spec.dim is not None and pts.shape[-1] != spec.dim:
        raise ValueError(f"point dimension {pts.shape[-1]} != damping dimension {spec.dim}")
    if box is not None and not isinstance(spec, GridSampled):
        if np.any(np.abs(pts) > box / 2):
            raise ValueError(f"point outside the box [-{box / 2}, {box / 2}]^d")
    out = spec._values(pts)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SublevelMask:
    """Node mask of ``{x : a(x) < epsilon}``."""

    grid: TorusGrid
    epsilon: float
    mask: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def fraction(self) -> float:
        return self.count / self.grid.size

    @property
    def measure(self) -> float:
        """Node-count estimate of the Lebesgue measure of the set."""
        return self.count * self.grid.cell_volume


def sublevel_mask(spec: DampingSpec, grid: TorusGrid, epsilon: float) -> SublevelMask:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    mask = spec.sample(grid) < epsilon
    mask.setflags(write=False)
    return SublevelMask(grid, float(epsilon), mask)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESETS = ("constant", "interval_gap", "lattice_balls", "grid_lines", "finite_ball", "smooth_bump")


def preset(name: str, d: int = 1, *, level: float = 1.0, **kw) -> DampingSpec:
    """Named catalog entries used across tests and example scenarios.

    ``lattice_balls`` damps the balls of radius ``radius`` centred on
    ``period * Z^2``: the undamped set is connected and contains straight lines.
    ``grid_lines`` damps strips of width ``width`` along both coordinate axes.
    """
    if name == "constant":
        return Constant(level)
    if name == "interval_gap":
        if d != 1:
            raise ValueError("interval_gap is one-dimensional")
        return IndicatorComplement((Ball((0.0,), kw.get("radius", 1.0)),), level)
    if name == "finite_ball":
        return IndicatorComplement((Ball((0.0,) * d, kw.get("radius", 1.0)),), level)
    if name == "smooth_bump":
        return SmoothBump(level, (Ball((0.0,) * d, kw.get("radius", 1.0)),))
    if name == "lattice_balls":
        if d != 2:
            raise ValueError("lattice_balls is two-dimensional")
        period = kw.get("period", 1.0)
        return PeriodicPattern(period, (Ball((0.0, 0.0), kw.get("radius", 0.3 * period)),), level)
    if name == "grid_lines":
        if d != 2:
            raise ValueError("grid_lines is two-dimensional")
        period = kw.get("period", 1.0)
        w = kw.get("width", 0.2 * period) / 2
        h = period / 2
        strips = (Box((-w, -h), (w, h)), Box((-h, -w), (h, w)))
        return PeriodicPattern(period, strips, level)
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
