"""Sharp constants as reciprocal smallest singular values of finite operators.

Four operators are covered:

* ``full_A``: the weighted generator shifted by ``-i lam``;
* ``halfwave``: ``f -> ((Lam - lam) f, sqrt(a) f)`` stacked;
* ``one_sided``: a multiplication operator restricted to a set of Fourier modes;
* ``two_sided``: ``f -> ((1 - P) F f, 1_{S^c} f)`` stacked, with ``P`` the
  projection onto a frequency set.

Stacked operators use the l2-combined right-hand side. The best constant for
the sum ``|M1 f| + |M2 f|`` then lies in ``[combined / sqrt 2, combined]``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, cg, eigsh

from .damping import DampingSpec, SublevelMask
from .evolution import DEFAULT_DENSE_CAP, Generator
from .spectral import AnnulusSet, TorusGrid, annulus

OperatorKind = Literal["full_A", "halfwave", "one_sided", "two_sided"]
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SvdOutcome:
    sigma: float
    method: str
    converged: bool = True
    residual: float = 0.0


@dataclass(frozen=True)
class ResolventPoint:
    lam: float
    sigma_min: float
    operator: OperatorKind
    method: str
    converged: bool = True
    residual: float = 0.0
    sum_form_bounds: tuple[float, float] | None = None

    @property
    def constant(self) -> float:
        if self.sigma_min == 0:
            return math.inf
        if math.isinf(self.sigma_min):
            return 0.0
        return 1.0 / self.sigma_min


@dataclass(frozen=True)
class AnnihilationResult:
    s_mask: np.ndarray = field(repr=False)
    sigma_mask: np.ndarray = field(repr=False)
    sigma_min: float
    method: str
    converged: bool = True
    residual: float = 0.0

    @property
    def combined_constant(self) -> float:
        return math.inf if self.sigma_min == 0 else 1.0 / self.sigma_min

    @property
    def sum_form_bounds(self) -> tuple[float, float]:
        """Interval containing the best constant for the sum-form right-hand side."""
        c = self.combined_constant
        return (c / SQRT2, c)

    @property
    def sum_form_sigma_bounds(self) -> tuple[float, float]:
        """Interval containing ``inf (|M1 f| + |M2 f|) / |f|``."""
        return (self.sigma_min, SQRT2 * self.sigma_min)


def _sum_bounds(sigma: float) -> tuple[float, float]:
    c = math.inf if sigma == 0 else 1.0 / sigma
    return (c / SQRT2, c)


# ---------------------------------------------------------------------------
# smallest singular value
# ---------------------------------------------------------------------------


def _dense_sigma(mat: np.ndarray) -> SvdOutcome:
    if mat.shape[1] == 0:
        return SvdOutcome(math.inf, "dense_svd")
    if mat.shape[0] < mat.shape[1]:
        return SvdOutcome(0.0, "dense_svd")
    sv = np.linalg.svd(mat, compute_uv=False)
    return SvdOutcome(float(sv[-1]), "dense_svd")


def _iterative_sigma(
    op: LinearOperator, tol: float = 1e-10, maxiter: int | None = None, restarts: int = 3
) -> SvdOutcome:
    """Inverse iteration on the normal operator via Lanczos, with CG inner solves."""
    n = op.shape[1]
    normal = LinearOperator((n, n), matvec=lambda x: op.rmatvec(op.matvec(x)), dtype=complex)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    budget = maxiter or 10 * n
    last_residual = math.inf
    for attempt in range(restarts):
        failures = []

        def solve(b, _budget=budget):
            x, info = cg(normal, b, rtol=tol * 1e-2, atol=0.0, maxiter=_budget)
            if info != 0:
                failures.append(info)
            return x

        inv = LinearOperator((n, n), matvec=solve, dtype=complex)
        try:
            vals, vecs = eigsh(inv, k=1, which="LA", tol=tol, v0=v0, maxiter=budget)
        except ArpackNoConvergence:
            budget *= 4
            continue
        mu = float(vals[0])
        if mu <= 0 or failures:
            budget *= 4
            continue
        sigma_sq = 1.0 / mu
        x = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
        last_residual = float(np.linalg.norm(normal.matvec(x) - sigma_sq * x) / sigma_sq)
        if last_residual <= max(1e3 * tol, 1e-8):
            return SvdOutcome(math.sqrt(sigma_sq), "iterative", True, last_residual)
        budget *= 4
    return SvdOutcome(math.nan, "iterative", False, last_residual)


def smallest_singular_value(
    op: np.ndarray | LinearOperator,
    *,
    dense: np.ndarray | Callable[[], np.ndarray] | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
    tol: float = 1e-10,
    maxiter: int | None = None,
    restarts: int = 3,
) -> SvdOutcome:
    """Smallest singular value of a tall (or square) operator.

    A dense array is decomposed directly. For a linear operator, the dense
    realization (``dense``) is used when the column count is within
    ``dense_cap``; otherwise the iterative path runs.
    """
    if isinstance(op, np.ndarray):
        return _dense_sigma(op)
    if dense is not None and op.shape[1] <= dense_cap:
        return _dense_sigma(dense() if callable(dense) else dense)
    return _iterative_sigma(op, tol=tol, maxiter=maxiter, restarts=restarts)


def _auto_dense(method: str, cols: int, cap: int) -> bool:
    if method == "dense_svd":
        return True
    if method == "iterative":
        return False
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    return cols <= cap


# ---------------------------------------------------------------------------
# full generator
# ---------------------------------------------------------------------------


def _weighted_adjoint(gen: Generator, z: np.ndarray) -> np.ndarray:
    """Action of the transpose ``[[0, -Lam], [Lam, -a]]``."""
    g = gen.grid
    n = gen.n
    z1 = z[:n].reshape(g.shape)
    z2 = z[n:].reshape(g.shape)
    lz1 = g.ifft(gen.lam * g.fft(z1))
    lz2 = g.ifft(gen.lam * g.fft(z2))
    return np.concatenate([(-lz2).ravel(), (lz1 - gen.a * z2).ravel()])


def resolvent_constant_full(gen: Generator, lam: float, method: str = "auto") -> ResolventPoint:
    """Best ``C`` in ``|F| <= C |(A - i lam) F|`` for the energy norm."""
    n2 = 2 * gen.n
    if _auto_dense(method, n2, gen.dense_cap):
        mat = gen.weighted_matrix() - 1j * lam * np.eye(n2)
        out = _dense_sigma(mat)
    else:
        op = LinearOperator(
            (n2, n2),
            matvec=lambda z: gen.weighted_apply(z) - 1j * lam * z,
            rmatvec=lambda z: _weighted_adjoint(gen, z) + 1j * lam * z,
            dtype=complex,
        )
        out = _iterative_sigma(op)
    return ResolventPoint(float(lam), out.sigma, "full_A", out.method, out.converged, out.residual)


def _sign(lam: float) -> float:
    return 1.0 if lam >= 0 else -1.0


def halfwave_diagonalizer(grid: TorusGrid, s: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``P`` and ``P^-1`` on unweighted states ``(u, v)``.

    ``P = (1/sqrt 2) [[Lam, -i sgn], [Lam, i sgn]]`` with ``Lam`` the half
    symbol multiplier and ``sgn(0) = 1``. Conjugating the undamped generator
    ``[[0, 1], [-Lam^2, 0]] - i lam`` by ``P`` gives the diagonal operator
    ``diag(i sgn (Lam - |lam|), -i sgn (Lam + |lam|))``.
    """
    n = grid.size
    sym = grid.half_symbol(s)
    lm = np.real(grid.multiplier_matrix(sym))
    lm_inv = np.real(grid.multiplier_matrix(1.0 / sym))
    eye = np.eye(n)
    sg = _sign(lam)
    p = np.block([[lm, -1j * sg * eye], [lm, 1j * sg * eye]]) / SQRT2
    p_inv = np.block([[lm_inv, lm_inv], [1j * sg * eye, -1j * sg * eye]]) / SQRT2
    return p, p_inv


def halfwave_diagonal(grid: TorusGrid, s: float, lam: float) -> np.ndarray:
    """Dense diagonal target of :func:`halfwave_diagonalizer` (Fourier entries mapped to space)."""
    sym = grid.half_symbol(s)
    sg = _sign(lam)
    top = grid.multiplier_matrix(1j * sg * (sym - abs(lam)))
    bottom = grid.multiplier_matrix(-1j * sg * (sym + abs(lam)))
    zero = np.zeros_like(top)
    return np.block([[top, zero], [zero, bottom]])


# ---------------------------------------------------------------------------
# half-wave operator with damping
# ---------------------------------------------------------------------------


def _weights(grid: TorusGrid, damping: DampingSpec | np.ndarray) -> np.ndarray:
    if isinstance(damping, DampingSpec):
        return np.sqrt(damping.sample(grid))
    arr = np.asarray(damping, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError("weight array does not match the grid")
    return np.sqrt(arr)


def halfwave_constant(
    grid: TorusGrid,
    s: float,
    damping: DampingSpec | np.ndarray,
    lam: float,
    method: str = "auto",
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> ResolventPoint:
    """Best ``C`` in ``|f| <= C sqrt(|(Lam - lam) f|^2 + |sqrt(a) f|^2)``.

    ``damping`` is a spec or an array of damping values on the grid.
    """
    n = grid.size
    root = _weights(grid, damping).ravel()
    shifted = grid.half_symbol(s) - lam
    if _auto_dense(method, n, dense_cap):
        top = np.real(grid.multiplier_matrix(shifted))
        out = _dense_sigma(np.vstack([top, np.diag(root)]))
    else:

        def mv(f):
            f = f.reshape(grid.shape)
            return np.concatenate([grid.ifft(shifted * grid.fft(f)).ravel(), (root * f.ravel())])

        def rmv(y):
            y1 = y[:n].reshape(grid.shape)
            return grid.ifft(shifted * grid.fft(y1)).ravel() + root * y[n:]

        op = LinearOperator((2 * n, n), matvec=mv, rmatvec=rmv, dtype=complex)
        out = _iterative_sigma(op)
    return ResolventPoint(
        float(lam), out.sigma, "halfwave", out.method, out.converged, out.residual, _sum_bounds(out.sigma)
    )


# ---------------------------------------------------------------------------
# annihilation constants
# ---------------------------------------------------------------------------


def _freq_mask(grid: TorusGrid, sigma: AnnulusSet | np.ndarray) -> np.ndarray:
    if isinstance(sigma, AnnulusSet):
        if sigma.mask is None:
            raise ValueError("annulus has no grid mask; build it with a grid")
        mask = sigma.mask
    else:
        mask = np.asarray(sigma, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError("frequency mask does not match the grid")
    return mask


def _space_mask(grid: TorusGrid, s_set: SublevelMask | np.ndarray) -> np.ndarray:
    mask = s_set.mask if isinstance(s_set, SublevelMask) else np.asarray(s_set, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError("spatial mask does not match the grid")
    return mask


def mode_columns(grid: TorusGrid, freq_mask: np.ndarray) -> np.ndarray:
    """Spatial values of the unit Fourier modes selected by ``freq_mask`` (n x k)."""
    idx = np.flatnonzero(freq_mask.ravel())
    units = np.zeros((idx.size, grid.size), dtype=complex)
    units[np.arange(idx.size), idx] = 1.0
    units = units.reshape((idx.size,) + grid.shape)
    return grid.ifft(units).reshape(idx.size, grid.size).T


def annihilation_one_sided(
    grid: TorusGrid,
    sigma: AnnulusSet | np.ndarray,
    *,
    damping: DampingSpec | np.ndarray | None = None,
    s_set: SublevelMask | np.ndarray | None = None,
    method: str = "auto",
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> ResolventPoint:
    """Best ``C`` with ``|f| <= C |w f|`` over ``f`` with spectrum in the set.

    The weight ``w`` is ``sqrt(a)`` when ``damping`` is given and the
    indicator of the complement of ``s_set`` otherwise.
    """
    if (damping is None) == (s_set is None):
        raise ValueError("give exactly one of damping or s_set")
    fmask = _freq_mask(grid, sigma)
    if not fmask.any():
        raise ValueError("frequency set is empty")
    if damping is not None:
        w = _weights(grid, damping).ravel()
    else:
        w = (~_space_mask(grid, s_set)).ravel().astype(float)
    k = int(fmask.sum())
    lam = float(sigma.lam) if isinstance(sigma, AnnulusSet) else math.nan
    if _auto_dense(method, k, dense_cap):
        out = _dense_sigma(w[:, None] * mode_columns(grid, fmask))
    else:
        idx = np.flatnonzero(fmask.ravel())

        def mv(c):
            hat = np.zeros(grid.size, dtype=complex)
            hat[idx] = c
            return w * grid.ifft(hat.reshape(grid.shape)).ravel()

        def rmv(y):
            return grid.fft((w * y).reshape(grid.shape)).ravel()[idx]

        out = _iterative_sigma(LinearOperator((grid.size, k), matvec=mv, rmatvec=rmv, dtype=complex))
    return ResolventPoint(lam, out.sigma, "one_sided", out.method, out.converged, out.residual)


def annihilation_two_sided(
    grid: TorusGrid,
    s_set: SublevelMask | np.ndarray,
    sigma: AnnulusSet | np.ndarray,
    method: str = "auto",
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> AnnihilationResult:
    """Best ``C`` in ``|f| <= C sqrt(|hat f|^2 off the set + |f|^2 off S)``."""
    smask = _space_mask(grid, s_set)
    fmask = _freq_mask(grid, sigma)
    n = grid.size
    keep_f = (~fmask).ravel().astype(float)
    keep_s = (~smask).ravel().astype(float)
    if _auto_dense(method, n, dense_cap):
        top = keep_f[:, None] * grid.dft_matrix()
        out = _dense_sigma(np.vstack([top, np.diag(keep_s)]))
    else:

        def mv(f):
            f = f.reshape(grid.shape)
            return np.concatenate([keep_f * grid.fft(f).ravel(), keep_s * f.ravel()])

        def rmv(y):
            return grid.ifft((keep_f * y[:n]).reshape(grid.shape)).ravel() + keep_s * y[n:]

        out = _iterative_sigma(LinearOperator((2 * n, n), matvec=mv, rmatvec=rmv, dtype=complex))
    return AnnihilationResult(smask, fmask, out.sigma, out.method, out.converged, out.residual)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    kind: OperatorKind
    points: tuple[ResolventPoint, ...]
    lam_max: float
    tail: dict

    @property
    def constants(self) -> np.ndarray:
        return np.array([p.constant for p in self.points])

    @property
    def sup_constant(self) -> float:
        return float(np.max(self.constants))

    @property
    def argmax(self) -> float:
        return self.points[int(np.argmax(self.constants))].lam

    def csv_text(self) -> str:
        rows = ["lambda,sigma_min,constant"]
        for p in self.points:
            rows.append(f"{p.lam:.17g},{p.sigma_min:.17g},{p.constant:.17g}")
        return "\n".join(rows) + "\n"


def default_workers() -> int:
    """Worker count from ``KGSTAB_WORKERS``, falling back to 1."""
    raw = os.environ.get("KGSTAB_WORKERS")
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise ValueError(f"KGSTAB_WORKERS must be an integer, got {raw!r}") from None
    if val < 1:
        raise ValueError("KGSTAB_WORKERS must be >= 1")
    return val


_KINDS = ("full_A", "halfwave", "one_sided", "two_sided")


def _point_fn(kind: OperatorKind, params: dict) -> Callable[[float], ResolventPoint]:
    if kind not in _KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}; choose from {', '.join(_KINDS)}")
    method = params.get("method", "auto")
    if kind == "full_A":
        gen: Generator = params["generator"]
        return lambda lam: resolvent_constant_full(gen, lam, method)
    grid: TorusGrid = params["grid"]
    s = params["s"]
    if kind == "halfwave":
        damping = params["damping"]
        return lambda lam: halfwave_constant(grid, s, damping, lam, method)
    mu = params["mu"]
    if kind == "one_sided":

        def one(lam: float) -> ResolventPoint:
            ann = annulus(lam, s, mu, grid)
            if not ann.mask.any():
                return ResolventPoint(lam, math.inf, "one_sided", "vacuous")
            return annihilation_one_sided(
                grid, ann, damping=params.get("damping"), s_set=params.get("s_set"), method=method
            )

        return one
    if kind == "two_sided":

        def two(lam: float) -> ResolventPoint:
            ann = annulus(lam, s, mu, grid)
            res = annihilation_two_sided(grid, params["s_set"], ann, method)
            return ResolventPoint(
                lam, res.sigma_min, "two_sided", res.method, res.converged, res.residual, res.sum_form_bounds
            )

        return two
    raise ValueError(f"unknown sweep kind {kind!r}")


def _tail_report(kind: OperatorKind, params: dict, points: tuple[ResolventPoint, ...]) -> dict:
    """Check monotone decay of constants for lambda beyond the largest grid symbol."""
    if kind == "full_A":
        gen = params["generator"]
        top = float(np.max(gen.lam))
    else:
        top = float(np.max(params["grid"].half_symbol(params["s"])))
        if kind in ("one_sided", "two_sided"):
            top += params["mu"]
    tail = [p.constant for p in points if p.lam > top and np.isfinite(p.constant)]
    monotone = bool(all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:])))
    return {"max_grid_symbol": top, "tail_points": len(tail), "tail_nonincreasing": monotone}


def lambda_sweep(
    kind: OperatorKind,
    params: dict,
    lam_max: float,
    n_points: int,
    workers: int | None = None,
) -> SweepResult:
    """Evaluate a constant on the uniform grid ``linspace(0, lam_max, n_points)``.

    ``params`` holds ``generator`` for ``full_A``; ``grid`` and ``s`` plus
    ``damping`` (halfwave), ``mu`` with ``damping`` or ``s_set`` (one_sided) or
    ``mu`` with ``s_set`` (two_sided). Points run on a thread pool and come back
    in grid order.
    """
    if not lam_max > 0:
        raise ValueError("lam_max must be positive")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    fn = _point_fn(kind, params)
    lams = np.linspace(0.0, lam_max, n_points)
    workers = workers or default_workers()
    if workers == 1:
        pts = tuple(fn(float(l)) for l in lams)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pts = tuple(pool.map(lambda l: fn(float(l)), lams))
    return SweepResult(kind, pts, float(lam_max), _tail_report(kind, params, pts))
