"""Discrete damped fractional Klein-Gordon generator, time stepping and energy.

States are pairs ``(u, v)`` with ``v = u_t``. The weighted coordinates
``z = (Lam u, v)`` with ``Lam = (1 - Laplacian)^(s/4)`` turn the energy into
the plain Euclidean norm ``|z|^2`` and the undamped generator into a
skew-symmetric matrix.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .damping import Constant, DampingSpec
from .spectral import SpectralField, TorusGrid

DEFAULT_DENSE_CAP = 4096


class NumericalFailure(RuntimeError):
    """Raised when a computation produces non-finite values or fails to converge."""


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatePair:
    """Position ``u`` and velocity ``v`` on a common grid and representation."""

    u: SpectralField
    v: SpectralField

    def __post_init__(self) -> None:
        if self.u.grid != self.v.grid:
            raise ValueError("state components live on different grids")
        if self.u.representation != self.v.representation:
            raise ValueError("state components use different representations")

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: TorusGrid, u, v, representation="space") -> "StatePair":
        return cls(SpectralField(grid, u, representation), SpectralField(grid, v, representation))

    def space(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u.to_space().values, self.v.to_space().values

    def frequency(self) -> tuple[np.ndarray, np.ndarray]:
        return self.u.to_frequency().values, self.v.to_frequency().values


def energy(state: StatePair, s: float) -> float:
    """Weighted energy, computed on Fourier coefficients."""
    uh, vh = state.frequency()
    sym = state.grid.full_symbol(s)
    return float(np.sum(sym * np.abs(uh) ** 2) + np.sum(np.abs(vh) ** 2))


def random_state(grid: TorusGrid, seed: int = 0, smoothness: float = 1.0) -> StatePair:
    """Real random state whose Fourier coefficients decay like (1+|xi|^2)^(-smoothness)."""
    rng = np.random.default_rng(seed)
    env = (1.0 + grid.xi_sq) ** (-smoothness)
    parts = []
    for _ in range(2):
        white = rng.standard_normal(grid.shape)
        parts.append(np.real(grid.ifft(env * grid.fft(white))))
    u, v = parts
    return StatePair.from_arrays(grid, u, v)


def gaussian_state(grid: TorusGrid, width: float = 1.0) -> StatePair:
    """Gaussian bump at rest, centred at the origin."""
    r2 = np.sum(grid.nodes**2, axis=-1)
    return StatePair.from_arrays(grid, np.exp(-r2 / width**2), np.zeros(grid.shape))


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Generator:
    """``A(u, v) = (v, -(1 - Laplacian)^(s/2) u - a v)`` on a torus grid."""

    grid: TorusGrid
    s: float
    damping: DampingSpec
    dense_cap: int = DEFAULT_DENSE_CAP

    def __post_init__(self) -> None:
        if not self.s > 0:
            raise ValueError(f"fractional order s must be positive, got {self.s}")

    @cached_property
    def a(self) -> np.ndarray:
        vals = np.asarray(self.damping.sample(self.grid), dtype=float)
        vals.setflags(write=False)
        return vals

    @cached_property
    def sqrt_a(self) -> np.ndarray:
        return np.sqrt(self.a)

    @cached_property
    def lam(self) -> np.ndarray:
        """Half-symbol values on frequency nodes."""
        return self.grid.half_symbol(self.s)

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def dense_available(self) -> bool:
        return 2 * self.n <= self.dense_cap

    @property
    def sup_damping(self) -> float:
        return float(np.max(self.a))

    # actions ---------------------------------------------------------------
    def apply(self, state: StatePair) -> StatePair:
        u, v = state.space()
        g = self.grid
        lap = g.ifft(self.lam**2 * g.fft(u))
        return StatePair.from_arrays(g, v, -lap - self.a * v)

    def invert(self, state: StatePair) -> StatePair:
        """``A^{-1}(g1, g2) = (-(1 - Laplacian)^(-s/2)(g2 + a g1), g1)``."""
        g1, g2 = state.space()
        g = self.grid
        f1 = -g.ifft(g.fft(g2 + self.a * g1) / self.lam**2)
        return StatePair.from_arrays(g, f1, g1)

    def to_weighted(self, state: StatePair) -> np.ndarray:
        """Stack ``(Lam u, v)`` in space as one vector of length ``2n``."""
        u, v = state.space()
        g = self.grid
        z1 = g.ifft(self.lam * g.fft(u))
        return np.concatenate([z1.ravel(), np.asarray(v).ravel()])

    def from_weighted(self, z: np.ndarray) -> StatePair:
        g = self.grid
        z1 = z[: self.n].reshape(g.shape)
        z2 = z[self.n :].reshape(g.shape)
        u = g.ifft(g.fft(z1) / self.lam)
        return StatePair.from_arrays(g, u, z2)

    def weighted_apply(self, z: np.ndarray) -> np.ndarray:
        """Matrix-free action of the weighted generator ``[[0, Lam], [-Lam, -a]]``."""
        g = self.grid
        z1 = z[: self.n].reshape(g.shape)
        z2 = z[self.n :].reshape(g.shape)
        lz1 = g.ifft(self.lam * g.fft(z1))
        lz2 = g.ifft(self.lam * g.fft(z2))
        return np.concatenate([lz2.ravel(), (-lz1 - self.a * z2).ravel()])

    # dense realization -----------------------------------------------------
    def _require_dense(self) -> None:
        if not self.dense_available:
            raise ValueError(
                f"dense matrix needs 2*N^d = {2 * self.n} <= dense_cap = {self.dense_cap}"
            )

    @cached_property
    def lam_matrix(self) -> np.ndarray:
        """Dense real symmetric matrix of ``Lam`` on node values."""
        self._require_dense()
        return np.real(self.grid.multiplier_matrix(self.lam))

    def weighted_matrix(self) -> np.ndarray:
        """Dense ``2n x 2n`` weighted generator."""
        self._require_dense()
        n = self.n
        lm = self.lam_matrix
        out = np.zeros((2 * n, 2 * n))
        out[:n, n:] = lm
        out[n:, :n] = -lm
        out[n:, n:] = -np.diag(self.a.ravel())
        return out


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    energies: np.ndarray
    method: str
    step: float | None = None
    states: list[StatePair] | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if self.times.shape != self.energies.shape:
            raise ValueError("times and energies differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.energies < 0):
            raise ValueError("energies must be nonnegative")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "energy"])
        for t, e in zip(self.times, self.energies):
            w.writerow([f"{t:.17g}", f"{e:.17g}"])
        return buf.getvalue()


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a nonempty 1-d sequence")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    return t


def _finite(z: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(z)):
        raise NumericalFailure(f"non-finite state at t={t:g}")


def _evolve_dense(gen: Generator, z0: np.ndarray, times: np.ndarray, keep: bool):
    mat = gen.weighted_matrix()
    cache: dict[float, np.ndarray] = {}
    z = z0.copy()
    t_prev = 0.0
    energies, states = [], []
    for t in times:
        h = float(t - t_prev)
        if h > 0:
            key = round(h, 14)
            if key not in cache:
                cache[key] = scipy.linalg.expm(h * mat)
            z = cache[key] @ z
        _finite(z, t)
        energies.append(float(np.vdot(z, z).real))
        if keep:
            states.append(gen.from_weighted(z))
        t_prev = t
    return energies, states


def _evolve_split(gen: Generator, z0: np.ndarray, times: np.ndarray, dt: float, keep: bool):
    g = gen.grid
    n = gen.n
    lam = gen.lam
    a = gen.a
    p = g.fft(z0[:n].reshape(g.shape))  # Lam u in frequency
    q = z0[n:].reshape(g.shape).astype(complex)  # v in space

    def rotate(p, qh, h):
        c, sn = np.cos(lam * h), np.sin(lam * h)
        return c * p + sn * qh, -sn * p + c * qh

    t_prev = 0.0
    energies, states = [], []
    for t in times:
        span = float(t - t_prev)
        if span > 0:
            m = max(1, int(np.ceil(span / dt - 1e-9)))
            h = span / m
            decay = np.exp(-a * h)
            qh = g.fft(q)
            p, qh = rotate(p, qh, h / 2)
            for k in range(m):
                q = decay * g.ifft(qh)
                qh = g.fft(q)
                p, qh = rotate(p, qh, h if k < m - 1 else h / 2)
            q = g.ifft(qh)
        z = np.concatenate([g.ifft(p).ravel(), q.ravel()])
        _finite(z, t)
        energies.append(float(np.vdot(z, z).real))
        if keep:
            states.append(gen.from_weighted(z))
        t_prev = t
    return energies, states


def evolve(
    gen: Generator,
    state0: StatePair,
    times: Sequence[float],
    method: Literal["dense_expm", "strang_split"] = "dense_expm",
    dt: float | None = None,
    keep_states: bool = False,
) -> Trajectory:
    """Propagate ``state0`` (given at t = 0) to each requested time.

    ``dense_expm`` uses the matrix exponential of the weighted generator.
    ``strang_split`` alternates an exact per-mode rotation of the undamped
    problem with the exact pointwise damping factor ``exp(-a dt)``.
    """
    t = _check_times(times)
    if state0.grid != gen.grid:
        raise ValueError("state grid does not match generator grid")
    z0 = gen.to_weighted(state0)
    if method == "dense_expm":
        gen._require_dense()
        energies, states = _evolve_dense(gen, z0, t, keep_states)
        step = None
    elif method == "strang_split":
        if dt is None or not dt > 0:
            raise ValueError("strang_split needs a positive dt")
        energies, states = _evolve_split(gen, z0, t, float(dt), keep_states)
        step = float(dt)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Trajectory(t, energies, method, step, states if keep_states else None)


def decay_curve(
    gen: Generator,
    state0: StatePair,
    T: float,
    n: int,
    smooth: bool = False,
    method: Literal["dense_expm", "strang_split"] = "dense_expm",
    dt: float | None = None,
) -> Trajectory:
    """Energy on ``n`` uniform times in ``[0, T]``.

    With ``smooth`` the initial state is first mapped through the inverse
    generator, so the curve probes the smoothed semigroup.
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if n < 2:
        raise ValueError("need at least two samples")
    start = gen.invert(state0) if smooth else state0
    traj = evolve(gen, start, np.linspace(0.0, T, n), method=method, dt=dt)
    traj.meta["smooth"] = bool(smooth)
    return traj


# ---------------------------------------------------------------------------
# constant damping, exact per mode
# ---------------------------------------------------------------------------


def _cosh_sinhc(phi_sq: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """``cosh(phi t)`` and ``sinh(phi t) / phi`` as functions of ``phi^2``."""
    z = phi_sq.astype(complex) * t * t
    small = np.abs(z) < 1e-6
    root = np.sqrt(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.cosh(root)
        sc = t * np.where(small, 1.0, np.sinh(root) / np.where(small, 1.0, root))
    c = np.where(small, 1 + z / 2 + z * z / 24, c)
    sc = np.where(small, t * (1 + z / 6 + z * z / 120), sc)
    return c, sc


def constant_damping_closed_form(a0: float, s: float, state0: StatePair, t: float) -> StatePair:
    """Exact solution for ``a = a0`` obtained from the per-mode ODE.

    Each mode solves ``u'' + a0 u' + sigma u = 0`` with ``sigma`` the full symbol.
    With ``phi^2 = a0^2/4 - sigma`` and ``w = v0 + a0 u0 / 2``:
    ``u(t) = exp(-a0 t/2) (cosh(phi t) u0 + sinh(phi t)/phi w)``.
    """
    if a0 < 0 or t < 0:
        raise ValueError("need a0 >= 0 and t >= 0")
    grid = state0.grid
    uh, vh = state0.frequency()
    sigma = grid.full_symbol(s)
    phi_sq = a0 * a0 / 4.0 - sigma
    c, sc = _cosh_sinhc(phi_sq, t)
    w = vh + 0.5 * a0 * uh
    damp = np.exp(-0.5 * a0 * t)
    u_t = damp * (c * uh + sc * w)
    v_t = damp * (-0.5 * a0 * (c * uh + sc * w) + phi_sq * sc * uh + c * w)
    out = StatePair.from_arrays(grid, u_t, v_t, "frequency")
    if state0.u.representation == "space":
        out = StatePair(out.u.to_space(), out.v.to_space())
    return out


def constant_generator(grid: TorusGrid, s: float, a0: float, **kw) -> Generator:
    return Generator(grid, s, Constant(a0), **kw)
