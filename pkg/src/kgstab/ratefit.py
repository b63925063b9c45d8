"""Fit energy decay curves to exponential, polynomial and logarithmic models.

All three fits are straight-line regressions of ``log E`` against a
transformed time axis, so residuals are comparable across models:

* exponential: ``log E`` vs ``t``; semigroup rate ``omega = -slope / 2``;
* polynomial: ``log E`` vs ``log(1 + t)``; ``E ~ (1+t)^(-2/p)``;
* logarithmic: ``log E`` vs ``log log(e + t)``; ``E ~ log(e+t)^(-2/p)``.

The energy is the square of the weighted norm, so every energy exponent is
twice the corresponding semigroup exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .evolution import Trajectory

Model = Literal["exponential", "polynomial", "logarithmic", "none"]
MODEL_ORDER = {"none": 0, "logarithmic": 1, "polynomial": 2, "exponential": 3}
MIN_WINDOW = 8
DEFAULT_MIN_TAIL = 16
TIE_FRACTION = 0.10
CONVERSION_NOTE = "energy exponent = 2 x semigroup exponent (energy is the squared energy norm)"


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    model: Model
    rate: float
    energy_exponent: float
    prefactor: float
    residual: float
    window: tuple[float, float]
    n_samples: int
    order: float | None = None  # p for polynomial and logarithmic fits
    flags: tuple[str, ...] = ()
    alternatives: dict = field(default_factory=dict)

    @property
    def conversion(self) -> str:
        return CONVERSION_NOTE

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "semigroup_rate": self.rate,
            "energy_exponent": self.energy_exponent,
            "order_p": self.order,
            "prefactor": self.prefactor,
            "residual_rms": self.residual,
            "window": list(self.window),
            "n_samples": self.n_samples,
            "conversion": CONVERSION_NOTE,
            "flags": list(self.flags),
            "alternatives": self.alternatives,
        }


def _arrays(traj: Trajectory | tuple[Sequence[float], Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(traj, Trajectory):
        return traj.times, traj.energies
    t, e = traj
    return np.asarray(t, float), np.asarray(e, float)


def tail_window(
    times: np.ndarray, window: tuple[float, float] | None = None, min_tail: int = DEFAULT_MIN_TAIL
) -> np.ndarray:
    """Boolean selector of the fitting window.

    The default is the last half of the samples, widened to ``min_tail``
    samples when the trajectory allows it.
    """
    n = times.size
    if window is None:
        k = min(n, max(n - n // 2, min_tail))
        sel = np.zeros(n, dtype=bool)
        sel[n - k :] = True
    else:
        lo, hi = window
        if hi <= lo:
            raise FitError(f"empty window [{lo}, {hi}]")
        if lo < times[0] - 1e-12 or hi > times[-1] + 1e-12:
            raise FitError(f"window [{lo}, {hi}] leaves the trajectory [{times[0]}, {times[-1]}]")
        sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if sel.sum() < MIN_WINDOW:
        raise FitError(f"window holds {int(sel.sum())} samples; at least {MIN_WINDOW} are needed")
    return sel


def _line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope, intercept and RMS residual."""
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def _prepare(traj, window):
    t, e = _arrays(traj)
    sel = tail_window(t, window)
    tw, ew = t[sel], e[sel]
    bad = np.flatnonzero(~(ew > 0))
    if bad.size:
        raise FitError(f"nonpositive energy at window sample {int(bad[0])} (t={tw[bad[0]]:g})")
    return tw, np.log(ew)


def _axis(model: Model, t: np.ndarray) -> np.ndarray:
    if model == "exponential":
        return t
    if model == "polynomial":
        return np.log1p(t)
    if model == "logarithmic":
        return np.log(np.log(math.e + t))
    raise ValueError(model)


def _fit(model: Model, traj, window) -> FitReport:
    t, y = _prepare(traj, window)
    slope, icpt, res = _line(_axis(model, t), y)
    if model == "exponential":
        rate, energy_exp, order = -slope / 2 + 0.0, -slope + 0.0, None
    else:
        energy_exp = -slope
        rate = -slope / 2
        order = math.inf if slope == 0 else -2.0 / slope
    with np.errstate(over="ignore"):
        # a badly misfitting model can carry a huge intercept; report it as inf
        prefactor = float(np.exp(icpt))
    return FitReport(model, rate, energy_exp, prefactor, res, (float(t[0]), float(t[-1])), int(t.size), order)


def fit_exponential(traj, window: tuple[float, float] | None = None) -> FitReport:
    """``E ~ c exp(-2 omega t)`` on the tail window."""
    return _fit("exponential", traj, window)


def fit_polynomial(traj, window: tuple[float, float] | None = None) -> FitReport:
    """``E ~ c (1 + t)^(-2/p)``; meaningful for smoothed initial data."""
    return _fit("polynomial", traj, window)


def fit_logarithmic(traj, window: tuple[float, float] | None = None) -> FitReport:
    """``E ~ c log(e + t)^(-2/p)``; needs long horizons to separate from the others."""
    return _fit("logarithmic", traj, window)


def _decays(rep: FitReport, t_span: float) -> bool:
    # relative energy drop implied by the fit over the window must be visible
    x = {"exponential": t_span}.get(rep.model)
    lo, hi = rep.window
    if x is None:
        ax = _axis(rep.model, np.array([lo, hi]))
        x = float(ax[1] - ax[0])
    return rep.energy_exponent * x > 1e-8


def select_model(traj, window: tuple[float, float] | None = None) -> FitReport:
    """Best-supported decaying model by residual, ties going to the weaker class."""
    fits = [fit_exponential(traj, window), fit_polynomial(traj, window), fit_logarithmic(traj, window)]
    alternatives = {f.model: {"residual_rms": f.residual, "semigroup_rate": f.rate} for f in fits}
    span = fits[0].window[1] - fits[0].window[0]
    decaying = [f for f in fits if _decays(f, span)]
    if not decaying:
        ref = fits[0]
        return FitReport(
            "none", 0.0, ref.energy_exponent, ref.prefactor, ref.residual, ref.window, ref.n_samples,
            None, ("no decay",), alternatives,
        )
    best = min(decaying, key=lambda f: f.residual)
    tied = [f for f in decaying if f.residual <= (1 + TIE_FRACTION) * best.residual]
    flags: tuple[str, ...] = ()
    if len(tied) > 1:
        weakest = min(tied, key=lambda f: MODEL_ORDER[f.model])
        if weakest.model != best.model:
            flags = (f"tie within {int(TIE_FRACTION * 100)}%: chose weaker model over {best.model}",)
        else:
            flags = (f"tie within {int(TIE_FRACTION * 100)}%",)
        best = weakest
    return FitReport(
        best.model, best.rate, best.energy_exponent, best.prefactor, best.residual, best.window,
        best.n_samples, best.order, flags, alternatives,
    )
