"""Fast built-in oracle checks for an installed copy (``kgstab selftest``).

Each check compares a library routine with an independent computation that
does not share its code path. The full suites live in the test directory.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import theory
from .damping import Constant, preset
from .evolution import Generator, StatePair, constant_damping_closed_form, energy, evolve, random_state
from .ratefit import select_model
from .spectral import TorusGrid, annulus


def _check_dft() -> bool:
    grid = TorusGrid(1, 2 * np.pi, 16)
    x = np.random.default_rng(1).standard_normal(16)
    k = np.arange(16)
    explicit = np.exp(-2j * np.pi * np.outer(k, k) / 16) @ x / 4.0
    return bool(np.allclose(grid.fft(x), explicit, atol=1e-12))


def _check_closed_form() -> bool:
    grid = TorusGrid(1, 20.0, 16)
    state = random_state(grid, 3)
    t = 1.5
    out = constant_damping_closed_form(0.7, 2.0, state, t)
    uh0, vh0 = state.frequency()
    sigma = grid.full_symbol(2.0)
    ok = True
    for j in (0, 3, 8):
        def rhs(_, y, j=j):
            return [y[1], -0.7 * y[1] - sigma[j] * y[0]]

        for part in (np.real, np.imag):
            sol = solve_ivp(rhs, (0, t), [part(uh0[j]), part(vh0[j])], rtol=1e-11, atol=1e-12)
            ok &= abs(sol.y[0, -1] - part(out.frequency()[0][j])) < 1e-8
    return bool(ok)


def _check_dense_vs_closed() -> bool:
    grid = TorusGrid(1, 20.0, 16)
    gen = Generator(grid, 2.0, Constant(1.0))
    state = random_state(grid, 4)
    traj = evolve(gen, state, [0.5, 1.0], keep_states=True)
    ref = constant_damping_closed_form(1.0, 2.0, state, 1.0)
    got = traj.states[-1]
    return abs(energy(got, 2.0) - energy(ref, 2.0)) <= 1e-10 * energy(ref, 2.0)


def _check_skew() -> bool:
    grid = TorusGrid(1, 10.0, 16)
    gen = Generator(grid, 1.5, preset("interval_gap"))
    rng = np.random.default_rng(5)
    z = rng.standard_normal(2 * gen.n) + 1j * rng.standard_normal(2 * gen.n)
    lhs = np.real(np.vdot(z, gen.weighted_apply(z)))
    rhs = -np.sum(gen.a.ravel() * np.abs(z[gen.n :]) ** 2)
    return abs(lhs - rhs) <= 1e-10 * np.vdot(z, z).real


def _check_annulus() -> bool:
    ann = annulus(100.0, 2.0, 1.0)
    return abs(ann.width - 2.0) < 0.02


def _check_extrapolation() -> bool:
    exp4 = theory.exponential(("check",))
    ok = theory.extrapolate(exp4, 4, 2).rate == Fraction(1, 2)
    ok &= theory.exponent_q(Fraction(3, 2), 2, 0) == Fraction(1, 3)
    return bool(ok)


def _check_classify() -> bool:
    f1 = theory.Facts(d=1, s=3, one="holds")
    f2 = theory.Facts(d=2, s=2, zero="fails", one="fails", dd="holds")
    c2 = theory.classify(f2)
    return theory.classify(f1).tag == "Exponential" and c2.tag == "Logarithmic" and c2.rate == 1


def _check_chain() -> bool:
    led = theory.ConstantLedger.of(
        annihilation_constant=1.0, sublevel_threshold=1.0, annulus_halfwidth=1.0, damping_sup=1.0
    )
    out = theory.constant_chain(led, "exp_from_annihilation")
    return math.isclose(out["inverse_decay_rate"], 192.0)


def _check_fit() -> bool:
    t = np.linspace(0.0, 20.0, 101)
    r = select_model((t, 3.0 * np.exp(-2.0 * t)))
    return r.model == "exponential" and abs(r.rate - 1.0) < 1e-6


CHECKS: dict[str, Callable[[], bool]] = {
    "unitary transform matches the explicit DFT sum": _check_dft,
    "closed form matches an ODE integrator": _check_closed_form,
    "matrix exponential matches the closed form": _check_dense_vs_closed,
    "weighted generator dissipation identity": _check_skew,
    "annulus width tends to 2 for s = 2": _check_annulus,
    "extrapolation specializations": _check_extrapolation,
    "classifier examples": _check_classify,
    "constant chain 192": _check_chain,
    "rate fit on an exact exponential": _check_fit,
}


def run_selftest(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in CHECKS.items():
        try:
            ok = bool(fn())
            detail = ""
        except Exception as exc:  # report and keep going
            ok, detail = False, f" ({type(exc).__name__}: {exc})"
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}{detail}")
    return all_ok
