"""Scenario orchestration: run analyses, write CSV/SVG files and a JSON report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import theory
from .config import SCHEMA_VERSION, ClassifyConfig, GccConfig, Scenario
from .damping import DampingSpec, sublevel_mask
from .evolution import Generator, NumericalFailure, decay_curve, gaussian_state, random_state
from .geometry import GccReport, Region, check_d_gcc, check_one_gcc, check_zero_gcc, controlled_region, shrink
from .plotting import Series, emit_plot
from .ratefit import MODEL_ORDER, FitReport, select_model
from .resolvent import SweepResult, lambda_sweep
from .spectral import TorusGrid

LOG_HORIZON = 1e3
CONVENTIONS = {
    "energy": "squared H^(s/2) x L^2 norm of (u, u_t), computed on unitary Fourier coefficients",
    "semigroup_rate": "exponent of the semigroup norm bound; omega for exponential, 1/p for polynomial or logarithmic",
    "energy_exponent": "exponent of the energy decay; twice the semigroup rate",
    "resolvent_constant": "1 / smallest singular value of the sampled operator",
    "lambda": "spectral parameter, canonicalized to lambda >= 0",
}
# Fitted model ranks compared against predicted classes.
_PREDICTED_RANK = {"Exponential": 3, "Polynomial": 2, "Logarithmic": 1, "SmallO": 1}


@dataclass
class Report:
    data: dict
    files: list[str] = field(default_factory=list)

    @property
    def errors(self) -> list[dict]:
        return self.data["errors"]

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 2


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps_report(data: dict) -> str:
    return json.dumps(_clean(data), indent=2, allow_nan=False) + "\n"


def _order_tag(s: float) -> str:
    return "s" + format(s, "g").replace(".", "p").replace("-", "m")


# ---------------------------------------------------------------------------
# geometric facts
# ---------------------------------------------------------------------------


def _aggregate(verdicts: list[str]) -> str:
    if "holds" in verdicts:
        return "holds"
    if verdicts and all(v == "fails" for v in verdicts):
        return "fails"
    return "unknown"


LADDER = (1.0, 2.0, 4.0)


def _ladder(check: Callable[[float], GccReport], base: float, limit: float | None) -> tuple[str, list[GccReport]]:
    """Run ``check`` on ``base`` times the ladder factors, capped at ``limit``.

    The condition only needs one scale, so it holds when any rung holds and
    fails only when every rung fails.
    """
    params = sorted({min(base * k, limit) if limit is not None else base * k for k in LADDER})
    reps = [check(p) for p in params]
    return _aggregate([r.verdict for r in reps]), reps


def gcc_analysis(spec: DampingSpec, grid: TorusGrid, cfg: GccConfig) -> dict:
    """GCC estimates over the epsilon ladder and a ladder of radii and lengths.

    A condition is recorded as holding when it holds at some epsilon and
    scale, and as failing when it fails at every epsilon and scale tried.
    Both verdicts are resolution-relative.
    """
    d = grid.d
    per_eps: list[dict] = []
    verdicts: dict[str, list[str]] = {"zero": [], "one": [], "dd": [], "margin_one": []}
    margin = cfg.margin if cfg.margin is not None else 2 * grid.spacing
    for eps in cfg.epsilons:
        region = controlled_region(spec, eps, d, grid.L)
        r_cap = None if region.periodic else grid.L / 2
        ell_cap = grid.L if d == 1 and not region.periodic else None
        zero = check_zero_gcc(spec, grid, eps)
        dd_v, dd = _ladder(
            lambda r: check_d_gcc(region, r, cfg.centers_per_axis, cfg.offsets_per_axis), cfg.radius, r_cap
        )
        one_v, one = _ladder(
            lambda ell: check_one_gcc(region, ell, cfg.directions, cfg.offsets_per_axis, cfg.quad_points),
            cfg.length,
            ell_cap,
        )
        entry = {
            "epsilon": eps,
            "zero": zero.to_dict(),
            "dd": {"verdict": dd_v, "reports": [r.to_dict() for r in dd]},
            "one": {"verdict": one_v, "reports": [r.to_dict() for r in one]},
        }
        verdicts["zero"].append(zero.verdict)
        verdicts["dd"].append(dd_v)
        verdicts["one"].append(one_v)
        if d >= 2 and one_v == "holds":
            mask = spec.sample(grid) >= eps
            inner = Region.from_mask(grid, shrink(grid, mask, margin).mask, name=f"shrunk a>={eps:g}")
            m1_v, m1 = _ladder(
                lambda ell: check_one_gcc(inner, ell, cfg.directions, cfg.offsets_per_axis, cfg.quad_points),
                cfg.length,
                None,
            )
            entry["margin_one"] = {"verdict": m1_v, "margin": margin, "reports": [r.to_dict() for r in m1]}
            verdicts["margin_one"].append(m1_v)
        per_eps.append(entry)
    summary = {k: _aggregate(v) for k, v in verdicts.items() if k != "margin_one"}
    # A failing shrunk check does not exclude a smaller margin, so only "holds" is recorded.
    summary["margin_one"] = "holds" if "holds" in verdicts["margin_one"] else "unknown"
    if d == 1:
        summary["margin_one"] = summary["one"]
    return {
        "per_epsilon": per_eps,
        "summary": summary,
        "scale_factors": list(LADDER),
        "scale_rule": "holds if some epsilon and scale holds; fails if every epsilon and scale fails",
    }


def derive_facts(spec: DampingSpec, d: int, s: float, gcc_summary: dict, cfg: ClassifyConfig) -> theory.Facts:
    structural: dict[str, Any] = {}
    if cfg.derive_structure:
        uc = spec.uniformly_continuous()
        structural = {
            "finite_measure_sublevel": spec.bounded_sublevel(),
            "periodic_superset": spec.periodic_sublevel(),
            "uniformly_continuous": uc,
            "continuous": uc,
        }
    values: dict[str, Any] = {k: gcc_summary.get(k, "unknown") for k in ("zero", "one", "dd", "margin_one")}
    values.update(structural)
    values.update({k: v for k, v in cfg.facts.model_dump().items() if v is not None})
    return theory.Facts(d=d, s=Fraction(repr(float(s))), **values)


def conformance(predicted: theory.StabilityClass | None, fit: FitReport | None) -> dict:
    """Compare the predicted class with the fitted model.

    A finite grid can only decay at least as well as the continuum model, so
    a fit at least as strong as the prediction is consistent.
    """
    if predicted is None or fit is None:
        return {"status": "undetermined", "reason": "prediction or fit missing"}
    rank = _PREDICTED_RANK.get(predicted.tag)
    if rank is None:
        return {"status": "undetermined", "reason": "no stability class predicted", "fitted": fit.model}
    status = "consistent" if MODEL_ORDER[fit.model] >= rank else "inconsistent"
    return {
        "status": status,
        "predicted": predicted.tag,
        "fitted": fit.model,
        "rule": "fitted model at least as strong as the predicted class",
    }


# ---------------------------------------------------------------------------
# constant chains
# ---------------------------------------------------------------------------


def _chains(start: dict[str, float], rules: list[str]) -> dict:
    out: dict[str, Any] = {"inputs": start, "rules": [], "skipped": []}
    if any(not math.isfinite(v) for v in start.values()):
        out["skipped"].append("a measured constant is unbounded on the sweep")
        return out
    ledger = theory.ConstantLedger.of(**start)
    for rule in rules:
        try:
            ledger = theory.constant_chain(ledger, rule)
            out["rules"].append(rule)
        except (ValueError, KeyError) as exc:
            out["skipped"].append(f"{rule}: {exc}")
    out["ledger"] = ledger.to_dict()
    out["note"] = "constants are suprema over the sampled lambda grid; chains are indicative"
    return out


def _sweep_ledger(kind: str, sweep: SweepResult, sup_a: float, mu: float, eps: float) -> dict:
    c = sweep.sup_constant
    if kind == "full_A":
        return _chains(
            {"resolvent_constant": c, "damping_sup": sup_a, "damping_op_norm": math.sqrt(sup_a)},
            ["exp_from_resolvent", "halfwave_from_resolvent", "annihilation_from_resolvent"],
        )
    if kind == "halfwave":
        return _chains(
            {
                "halfwave_shift_constant": c,
                "halfwave_damping_constant": c,
                "damping_op_norm": math.sqrt(sup_a),
                "spectral_parameter": 0.0,
            },
            ["resolvent_from_halfwave", "exp_from_resolvent", "onesided_from_halfwave"],
        )
    if kind == "two_sided":
        return _chains(
            {"annihilation_constant": c, "sublevel_threshold": eps, "annulus_halfwidth": mu, "damping_sup": sup_a},
            ["exp_from_annihilation"],
        )
    return _chains(
        {"onesided_constant": c, "annulus_halfwidth": mu, "damping_op_norm": math.sqrt(sup_a)},
        ["halfwave_from_onesided", "split_from_onesided"],
    )


def _sweep_summary(sweep: SweepResult) -> dict:
    unconverged = [p.lam for p in sweep.points if not p.converged]
    return {
        "kind": sweep.kind,
        "lam_max": sweep.lam_max,
        "n_points": len(sweep.points),
        "sup_constant": sweep.sup_constant,
        "argmax_lambda": sweep.argmax,
        "methods": sorted({p.method for p in sweep.points}),
        "unconverged_lambdas": unconverged,
        "tail": sweep.tail,
    }


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


class _Writer:
    """Serializes file writes and records relative names."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[str] = []

    def text(self, name: str, text: str) -> str:
        (self.root / name).write_text(text, encoding="utf-8", newline="\n")
        self.files.append(name)
        return name

    def plot(self, name: str, series: Series) -> str:
        emit_plot(series, self.root / name)
        self.files.append(name)
        return name


def _params(kind: str, scn: Scenario, grid: TorusGrid, spec: DampingSpec, s: float, mu: float, eps: float, method: str):
    if kind == "full_A":
        return {"generator": Generator(grid, s, spec, scn.dense_cap), "method": method}
    base = {"grid": grid, "s": s, "method": method}
    if kind == "halfwave":
        return base | {"damping": spec}
    if kind == "one_sided":
        return base | {"mu": mu, "damping": spec}
    return base | {"mu": mu, "s_set": sublevel_mask(spec, grid, eps)}


def run_scenario(
    scn: Scenario, output_dir: str | Path | None = None, log: Callable[[str], None] | None = None
) -> Report:
    """Execute the requested analyses for every order ``s``.

    A failing analysis is recorded in the report and does not stop the others.
    """
    log = log or (lambda msg: None)
    root = Path(output_dir if output_dir is not None else scn.output)
    root.mkdir(parents=True, exist_ok=True)
    out = _Writer(root)
    grid = scn.build_grid()
    spec = scn.build_damping()
    sup_a = float(np.max(spec.sample(grid)))
    requested = list(scn.analyses)
    errors: list[dict] = []
    warnings: list[str] = []

    def fail(analysis: str, s: float | None, exc: BaseException) -> None:
        errors.append(
            {
                "analysis": analysis,
                "s": s,
                "type": type(exc).__name__,
                "numerical": isinstance(exc, (NumericalFailure, ArithmeticError, np.linalg.LinAlgError)),
                "message": str(exc),
            }
        )
        log(f"error in {analysis} (s={s}): {exc}")

    data: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scn.model_dump(mode="json", exclude={"output"}),
        "conventions": CONVENTIONS,
        "damping_sup": sup_a,
    }

    gcc: dict | None = None
    if "gcc_check" in requested or "classify" in requested:
        log("geometric control estimates")
        try:
            gcc = gcc_analysis(spec, grid, scn.gcc_check)
            data["gcc"] = gcc
        except Exception as exc:  # recorded, the run continues
            fail("gcc_check", None, exc)

    orders = []
    for s in scn.s:
        tag = _order_tag(s)
        entry: dict[str, Any] = {"s": s}
        predicted = None
        fit = None
        if "classify" in requested and gcc is not None:
            try:
                facts = derive_facts(spec, grid.d, s, gcc["summary"], scn.classify)
                predicted = theory.classify(facts)
                entry["facts"] = {k: v for k, v in vars(facts.completed()).items() if k not in ("d", "s")}
                entry["prediction"] = predicted.to_dict()
            except Exception as exc:
                fail("classify", s, exc)
        if "simulate" in requested:
            log(f"simulate s={s:g}")
            cfg = scn.simulate
            try:
                gen = Generator(grid, s, spec, scn.dense_cap)
                if cfg.initial == "random":
                    state0 = random_state(grid, scn.seed, cfg.smoothness)
                else:
                    state0 = gaussian_state(grid, cfg.width)
                traj = decay_curve(gen, state0, cfg.T, cfg.n, cfg.smooth, cfg.method, cfg.dt)
                fit = select_model(traj, cfg.window)
                entry["fit"] = fit.to_dict()
                entry["trajectory_csv"] = out.text(f"trajectory_{tag}.csv", traj.csv_text())
                entry["decay_plot"] = out.plot(
                    f"decay_{tag}.svg",
                    Series(traj.times, traj.energies, f"s = {s:g}", "t", "energy", f"{scn.name}: energy", logy=True),
                )
                log_hypothesis = fit.model == "logarithmic" or (predicted is not None and predicted.tag == "Logarithmic")
                if log_hypothesis and cfg.T < LOG_HORIZON:
                    warnings.append(
                        f"s={s:g}: logarithmic hypothesis with T={cfg.T:g} < {LOG_HORIZON:g}; "
                        "logarithmic and polynomial fits are not separable at this horizon"
                    )
            except Exception as exc:
                fail("simulate", s, exc)
        if "resolvent_sweep" in requested:
            cfg = scn.resolvent_sweep
            log(f"resolvent sweep ({cfg.kind}) s={s:g}")
            try:
                params = _params(cfg.kind, scn, grid, spec, s, cfg.mu, cfg.epsilon, cfg.method)
                sweep = lambda_sweep(cfg.kind, params, cfg.lam_max, cfg.n_points, scn.workers)
                summ = _sweep_summary(sweep)
                summ["csv"] = out.text(f"sweep_{cfg.kind}_{tag}.csv", sweep.csv_text())
                summ["plot"] = out.plot(
                    f"sweep_{cfg.kind}_{tag}.svg",
                    Series([p.lam for p in sweep.points], sweep.constants, f"s = {s:g}", "lambda", "constant",
                           f"{scn.name}: {cfg.kind} constant"),
                )
                summ["ledger"] = _sweep_ledger(cfg.kind, sweep, sup_a, cfg.mu, cfg.epsilon)
                if summ["unconverged_lambdas"]:
                    warnings.append(f"s={s:g}: {len(summ['unconverged_lambdas'])} sweep points did not converge")
                entry["resolvent_sweep"] = summ
            except Exception as exc:
                fail("resolvent_sweep", s, exc)
        if "annihilation" in requested:
            cfg = scn.annihilation
            log(f"annihilation constants s={s:g}")
            try:
                res: dict[str, Any] = {"epsilon": cfg.epsilon, "mu": cfg.mu}
                for kind in ("two_sided", "one_sided"):
                    params = _params(kind, scn, grid, spec, s, cfg.mu, cfg.epsilon, cfg.method)
                    if kind == "one_sided":
                        params = {k: v for k, v in params.items() if k != "damping"}
                        params["s_set"] = sublevel_mask(spec, grid, cfg.epsilon)
                    sweep = lambda_sweep(kind, params, cfg.lam_max, cfg.n_points, scn.workers)
                    summ = _sweep_summary(sweep)
                    summ["csv"] = out.text(f"annihilation_{kind}_{tag}.csv", sweep.csv_text())
                    if kind == "two_sided":
                        c = summ["sup_constant"]
                        summ["sum_form_bounds"] = [c / math.sqrt(2), c]
                        summ["ledger"] = _sweep_ledger("two_sided", sweep, sup_a, cfg.mu, cfg.epsilon)
                    res[kind] = summ
                entry["annihilation"] = res
            except Exception as exc:
                fail("annihilation", s, exc)
        if "classify" in requested and "simulate" in requested:
            entry["conformance"] = conformance(predicted, fit)
        orders.append(entry)

    data["orders"] = orders
    data["warnings"] = warnings
    data["errors"] = errors
    data["completed"] = not errors
    data["files"] = sorted(out.files) + ["report.json"]
    out.text("report.json", dumps_report(data))
    for w in warnings:
        log(f"warning: {w}")
    return Report(data, out.files)
