"""Periodic-box discretization, unitary Fourier transforms and fractional symbols.

The whole space is approximated by the torus ``[-L/2, L/2)^d`` sampled on
``N`` points per axis. Transforms use the unitary normalization so that the
discrete L2 norm is the same in both representations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Literal

import numpy as np

Representation = Literal["space", "frequency"]


def _check_order(s: float) -> None:
    if not np.isfinite(s) or s <= 0:
        raise ValueError(f"fractional order s must be positive, got {s!r}")


def _xi_sq(xi) -> np.ndarray:
    """|xi|^2 for a frequency vector (last axis) or a scalar."""
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        return arr * arr
    return np.sum(arr * arr, axis=-1)


def half_symbol(s: float, xi) -> np.ndarray | float:
    """(|xi|^2 + 1)^(s/4), the symbol of (1 - Laplacian)^(s/4). Always >= 1."""
    _check_order(s)
    return (_xi_sq(xi) + 1.0) ** (s / 4.0)


def full_symbol(s: float, xi) -> np.ndarray | float:
    """(|xi|^2 + 1)^(s/2), the symbol of (1 - Laplacian)^(s/2)."""
    _check_order(s)
    return (_xi_sq(xi) + 1.0) ** (s / 2.0)


def half_symbol_from_sq(s: float, xi_sq) -> np.ndarray:
    """Same as :func:`half_symbol` but takes |xi|^2 directly."""
    _check_order(s)
    return (np.asarray(xi_sq, dtype=float) + 1.0) ** (s / 4.0)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on ``[-L/2, L/2)^d`` with ``N`` points per axis."""

    d: int
    L: float
    N: int

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"dimension d must be 1 or 2, got {self.d}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"box length L must be positive, got {self.L}")
        if self.N < 4 or self.N % 2:
            raise ValueError(f"N must be even and >= 4, got {self.N}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def spacing(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L / 2 + self.spacing * np.arange(self.N)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Spatial nodes, shape ``(N,)*d + (d,)``."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        """Angular frequencies in FFT order; the Nyquist entry is stored as -pi N / L."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.spacing)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Frequency nodes, shape ``(N,)*d + (d,)``, FFT order."""
        mesh = np.meshgrid(*([self.freq_axis] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """|xi|^2 on the frequency nodes."""
        return _xi_sq(self.frequencies)

    @property
    def nyquist(self) -> float:
        return np.pi * self.N / self.L

    def half_symbol(self, s: float) -> np.ndarray:
        return half_symbol_from_sq(s, self.xi_sq)

    def full_symbol(self, s: float) -> np.ndarray:
        return half_symbol_from_sq(s, self.xi_sq) ** 2

    # transforms on raw arrays -------------------------------------------
    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self._axes(values), norm="ortho")

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(values, axes=self._axes(values), norm="ortho")

    def _axes(self, values: np.ndarray) -> tuple[int, ...]:
        if values.shape[-self.d :] != self.shape:
            raise ValueError(f"array shape {values.shape} does not end with grid shape {self.shape}")
        return tuple(range(values.ndim - self.d, values.ndim))

    def dft_matrix(self) -> np.ndarray:
        """Unitary DFT matrix acting on C-order flattened node values."""
        f1 = np.fft.fft(np.eye(self.N), axis=0, norm="ortho")
        mat = f1
        for _ in range(self.d - 1):
            mat = np.kron(mat, f1)
        return mat

    def multiplier_matrix(self, symbol: np.ndarray) -> np.ndarray:
        """Dense spatial matrix of the Fourier multiplier with the given symbol values."""
        f = self.dft_matrix()
        return f.conj().T @ (np.asarray(symbol).reshape(-1)[:, None] * f)


@dataclass(frozen=True)
class SpectralField:
    """Complex grid values tagged with their representation."""

    grid: TorusGrid
    values: np.ndarray
    representation: Representation = "space"

    def __post_init__(self) -> None:
        if self.representation not in ("space", "frequency"):
            raise ValueError(f"unknown representation {self.representation!r}")
        arr = np.array(self.values, dtype=complex, copy=True)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values shape {arr.shape} != grid shape {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))

    def to_space(self) -> "SpectralField":
        return self if self.representation == "space" else transform(self, "inverse")

    def to_frequency(self) -> "SpectralField":
        return self if self.representation == "frequency" else transform(self, "forward")


def transform(field_: SpectralField, direction: Literal["forward", "inverse"]) -> SpectralField:
    """Unitary forward (space to frequency) or inverse transform."""
    if direction == "forward":
        if field_.representation != "space":
            raise ValueError("forward transform needs a space-representation field")
        return SpectralField(field_.grid, field_.grid.fft(field_.values), "frequency")
    if direction == "inverse":
        if field_.representation != "frequency":
            raise ValueError("inverse transform needs a frequency-representation field")
        return SpectralField(field_.grid, field_.grid.ifft(field_.values), "space")
    raise ValueError(f"unknown direction {direction!r}")


def apply_multiplier(
    field_: SpectralField, m: Callable[[np.ndarray], np.ndarray] | np.ndarray
) -> SpectralField:
    """Apply a Fourier multiplier; ``m`` is either symbol values or a function of xi.

    The result keeps the representation of the input.
    """
    grid = field_.grid
    symbol = m(grid.frequencies) if callable(m) else np.asarray(m)
    symbol = np.broadcast_to(symbol, grid.shape)
    hat = field_.to_frequency()
    out = SpectralField(grid, symbol * hat.values, "frequency")
    return out if field_.representation == "frequency" else out.to_space()


# ---------------------------------------------------------------------------
# frequency annuli
# ---------------------------------------------------------------------------

AnnulusShape = Literal["empty", "ball", "annulus"]


def _radius_at(level: float, s: float) -> float:
    """|xi| at which the half symbol equals ``level`` (level >= 1)."""
    return float(np.sqrt(max(level ** (4.0 / s) - 1.0, 0.0)))


@dataclass(frozen=True)
class AnnulusSet:
    """Frequencies whose half symbol lies within ``mu`` of ``lam``."""

    lam: float
    s: float
    mu: float
    shape: AnnulusShape
    r_inner: float | None
    r_outer: float | None
    mask: np.ndarray | None = field(default=None, repr=False, compare=False)
    clipped: bool = False

    @property
    def width(self) -> float:
        """Radial thickness; zero for the empty set."""
        if self.shape == "empty":
            return 0.0
        return float(self.r_outer - (self.r_inner or 0.0))

    def contains_radius(self, radius) -> np.ndarray:
        """Membership as a function of |xi|."""
        return np.abs(half_symbol_from_sq(self.s, np.asarray(radius, float) ** 2) - self.lam) < self.mu


def annulus_shape(lam: float, s: float, mu: float) -> tuple[AnnulusShape, float | None, float | None]:
    """Classify the set ``{xi : |(|xi|^2+1)^(s/4) - lam| < mu}`` by its radii."""
    _check_order(s)
    if not mu > 0:
        raise ValueError(f"half-width mu must be positive, got {mu}")
    if lam < 0:
        raise ValueError(f"spectral parameter must be canonicalized to >= 0, got {lam}")
    if lam + mu <= 1:
        return "empty", None, None
    r_out = _radius_at(lam + mu, s)
    if lam - mu < 1:
        return "ball", None, r_out
    return "annulus", _radius_at(lam - mu, s), r_out


def annulus(lam: float, s: float, mu: float, grid: TorusGrid | None = None) -> AnnulusSet:
    """Build the frequency set with its analytic shape and, given a grid, its mask.

    Negative ``lam`` is replaced by ``|lam|``. The mask comes from the direct
    membership test and is cross-checked against the radii.
    """
    lam = abs(float(lam))
    kind, r_in, r_out = annulus_shape(lam, s, mu)
    mask = None
    clipped = False
    if grid is not None:
        mask = np.abs(grid.half_symbol(s) - lam) < mu
        radius = np.sqrt(grid.xi_sq)
        if kind == "empty":
            expected = np.zeros_like(mask)
        elif kind == "ball":
            expected = radius < r_out
        else:
            expected = (radius > r_in) & (radius < r_out)
        # Radii are exact up to rounding; only nodes sitting on the boundary may differ.
        disagree = mask != expected
        if np.any(disagree):
            on_edge = np.zeros_like(disagree)
            for r in (r_in, r_out):
                if r is not None:
                    on_edge |= np.isclose(radius, r, rtol=1e-9, atol=1e-12)
            if np.any(disagree & ~on_edge):
                raise AssertionError("annulus mask disagrees with analytic radii")
        clipped = bool(r_out is not None and r_out > grid.nyquist)
        mask.setflags(write=False)
    return AnnulusSet(lam, float(s), float(mu), kind, r_in, r_out, mask, clipped)


def _ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def annulus_measure(lam: float, s: float, mu: float, d: int) -> float:
    """Lebesgue measure of the continuum frequency set in dimension ``d``."""
    kind, r_in, r_out = annulus_shape(abs(lam), s, mu)
    if kind == "empty":
        return 0.0
    inner = 0.0 if r_in is None else r_in**d
    return _ball_volume(d) * (r_out**d - inner)


def ball_in_annulus(r: float, s: float, mu: float = 1.0, d: int = 1, max_doublings: int = 200):
    """Find ``(center, lam)`` with the ball of radius ``r`` about ``center`` inside the annulus.

    Works for ``0 < s < 2``, where the radial thickness of the annulus grows
    without bound in ``lam``: double ``lam`` until the thickness exceeds ``2r``
    and centre the ball on the mid radius along the first axis.
    """
    _check_order(s)
    if not s < 2:
        raise ValueError("the annulus thickness is bounded for s >= 2; needs 0 < s < 2")
    if not r > 0:
        raise ValueError("radius must be positive")
    lam = 1.0 + 2.0 * mu
    for _ in range(max_doublings):
        _, r_in, r_out = annulus_shape(lam, s, mu)
        if r_out - r_in > 2 * r * (1 + 1e-9):
            center = np.zeros(d)
            center[0] = 0.5 * (r_in + r_out)
            return center, lam
        lam *= 2.0
    raise RuntimeError("no annulus thick enough within the doubling budget")
