"""Stability classes, the extrapolation-in-order calculus, the fact classifier
and explicit constant propagation.

Rates are stored at the semigroup level: a polynomial class with rate ``r``
means ``|T(t) A^{-1}| <= M (1+t)^(-r)``, a logarithmic class with rate ``r``
means ``|T(t) A^{-1}| <= M log(e+t)^(-r)``. Passing integers or
``fractions.Fraction`` values keeps every rate exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Literal, Mapping

Tag = Literal["Exponential", "Polynomial", "Logarithmic", "SmallO", "Unknown"]
TAG_ORDER: dict[str, int] = {"Unknown": 0, "SmallO": 1, "Logarithmic": 2, "Polynomial": 3, "Exponential": 4}
STABLE_TAGS: tuple[Tag, ...] = ("Exponential", "Polynomial", "Logarithmic", "SmallO")


def _exact(x):
    """Promote ints to Fractions so that divisions stay exact."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Rational) and not isinstance(x, Fraction):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class StabilityClass:
    tag: Tag
    rate: Fraction | float | None = None
    prefactor: float | None = None  # M for exponential classes
    exp_rate: float | None = None  # omega for exponential classes
    provenance: tuple[str, ...] = ()
    excluded: tuple[Tag, ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.tag not in TAG_ORDER:
            raise ValueError(f"unknown tag {self.tag!r}")
        if self.tag in ("Polynomial", "Logarithmic"):
            if self.rate is None or not self.rate > 0:
                raise ValueError(f"{self.tag} class needs a positive rate, got {self.rate}")
        elif self.rate is not None:
            raise ValueError(f"{self.tag} class carries no rate")

    @property
    def strength(self) -> tuple[int, float]:
        return (TAG_ORDER[self.tag], float(self.rate) if self.rate is not None else 0.0)

    def dominates(self, other: "StabilityClass") -> bool:
        """True when ``self`` is at least as strong as ``other``."""
        return self.strength >= other.strength

    def to_dict(self) -> dict:
        rate = self.rate
        return {
            "tag": self.tag,
            "rate": None if rate is None else float(rate),
            "rate_exact": None if not isinstance(rate, Fraction) else str(rate),
            "rate_convention": "semigroup exponent of |T(t) A^-1|; smoothed energy decays with twice this exponent",
            "prefactor": self.prefactor,
            "exp_rate": self.exp_rate,
            "provenance": list(self.provenance),
            "excluded": list(self.excluded),
            "notes": list(self.notes),
        }


def exponential(provenance: tuple[str, ...] = (), **kw) -> StabilityClass:
    return StabilityClass("Exponential", provenance=provenance, **kw)


def polynomial(rate, provenance: tuple[str, ...] = ()) -> StabilityClass:
    return StabilityClass("Polynomial", rate, provenance=provenance)


def logarithmic(rate, provenance: tuple[str, ...] = ()) -> StabilityClass:
    return StabilityClass("Logarithmic", rate, provenance=provenance)


# ---------------------------------------------------------------------------
# extrapolation in the fractional order
# ---------------------------------------------------------------------------


def exponent_q(s, s0, p=0):
    """``(1 + p) s0 / s - 1``."""
    s, s0, p = _exact(s), _exact(s0), _exact(p)
    if not (s > 0 and s0 > 0):
        raise ValueError("orders must be positive")
    if p < 0:
        raise ValueError("p must be nonnegative")
    return (1 + p) * s0 / s - 1


def extrapolate(cls: StabilityClass, s0, s) -> StabilityClass:
    """Transfer a class known at order ``s0`` to order ``s``."""
    s, s0 = _exact(s), _exact(s0)
    if not (s > 0 and s0 > 0):
        raise ValueError("orders must be positive")
    note = f"transferred from order {s0} to order {s}"
    prov = cls.provenance + (note,)
    if cls.tag == "Exponential":
        if s >= s0:
            return exponential(prov)
        return polynomial(1 / (2 * exponent_q(s, s0, 0)), prov)
    if cls.tag == "Polynomial":
        p = 1 / _exact(cls.rate)
        if s >= s0:
            return polynomial(s / (2 * s0 * p), prov)
        return polynomial(1 / (2 * exponent_q(s, s0, 2 * p)), prov)
    if cls.tag == "Logarithmic":
        p = 1 / _exact(cls.rate)
        return logarithmic(s / (s0 * p), prov)
    if cls.tag == "SmallO":
        return StabilityClass("SmallO", provenance=prov)
    return StabilityClass("Unknown", provenance=prov)


def strong_poly_rule(p, s0, s) -> StabilityClass:
    """Class at order ``s`` from a polynomial resolvent bound of order ``p`` at ``s0``.

    The bound is the strong form with the shifted half-wave term weighted by
    ``(1 + lambda)^(-p)``; it yields exponential stability once
    ``s >= (1 + p) s0``.
    """
    p, s0, s = _exact(p), _exact(s0), _exact(s)
    if p < 0 or not (s0 > 0 and s > 0):
        raise ValueError("need p >= 0 and positive orders")
    prov = (f"strong polynomial resolvent bound of order {p} at order {s0}",)
    if s >= (1 + p) * s0:
        return exponential(prov)
    return polynomial(1 / (2 * exponent_q(s, s0, p)), prov)


# ---------------------------------------------------------------------------
# facts and classification
# ---------------------------------------------------------------------------

Tri = Literal["holds", "fails", "unknown"]

RULES: dict[str, str] = {
    "ball-log": "ball condition on {a >= eps} gives (s/2)-logarithmic stability for every s",
    "ball-necessary": "without the ball condition the semigroup is not o(1) stable for any s",
    "full-measure-exp": "ess inf a > 0 gives exponential stability for every s",
    "fractional-needs-full-measure": "for 0 < s < 2 exponential stability forces ess inf a > 0",
    "segment-1d": "d = 1: segment condition gives exponential stability for s >= 2 and s/(4-2s)-polynomial for s < 2",
    "segment-margin": "d >= 2: a segment condition with a positive margin around {a < eps} gives exponential stability for s >= 2 and s/(4-2s)-polynomial for s < 2",
    "segment-necessary": "d >= 2, continuous a: exponential stability at s = 2 forces the segment condition",
    "finite-measure": "finite-measure sublevel set gives exponential stability for s >= 2d and (4d/s-2)^-1-polynomial below",
    "periodic-superset": "sublevel set inside a closed proper periodic set gives exponential stability for s >= 4 and (8/s-2)^-1-polynomial below",
}

OPEN_LARGE_S = (
    "open question: whether the ball condition alone gives exponential "
    "(or polynomial) stability for large s in d >= 2"
)


class ContradictoryFacts(ValueError):
    pass


@dataclass(frozen=True)
class Facts:
    """Geometric and structural facts about a damping coefficient.

    The geometric entries refer to ``{a >= eps}`` for some ``eps > 0``:
    ``zero`` (full measure), ``one`` (segment condition), ``dd`` (ball
    condition) and ``margin_one`` (segment condition for the points at
    positive distance from ``{a < eps}``).
    """

    d: int
    s: Fraction | float
    zero: Tri = "unknown"
    one: Tri = "unknown"
    dd: Tri = "unknown"
    margin_one: Tri = "unknown"
    finite_measure_sublevel: bool | None = None
    periodic_superset: bool | None = None
    uniformly_continuous: bool | None = None
    continuous: bool | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not self.s > 0:
            raise ValueError("order s must be positive")
        for name in ("zero", "one", "dd", "margin_one"):
            if getattr(self, name) not in ("holds", "fails", "unknown"):
                raise ValueError(f"{name} must be holds, fails or unknown")

    def completed(self) -> "Facts":
        """Close the facts under the implications between conditions."""
        tri = {k: getattr(self, k) for k in ("zero", "one", "dd", "margin_one")}
        flags = {
            k: getattr(self, k)
            for k in ("finite_measure_sublevel", "periodic_superset", "uniformly_continuous", "continuous")
        }

        def put(table, key, value, why):
            cur = table[key]
            if cur in (None, "unknown"):
                table[key] = value
                return True
            if cur != value:
                raise ContradictoryFacts(f"{key} is {cur} but {why} forces {value}")
            return False

        changed = True
        while changed:
            changed = False
            imp = [
                ("zero", "one"),
                ("one", "dd"),
                ("margin_one", "one"),
            ]
            if self.d == 1:
                imp.append(("dd", "one"))
            for a, b in imp:
                if tri[a] == "holds":
                    changed |= put(tri, b, "holds", f"{a} holds")
                if tri[b] == "fails":
                    changed |= put(tri, a, "fails", f"{b} fails")
            if flags["uniformly_continuous"] is True:
                changed |= put(flags, "continuous", True, "uniform continuity")
            if flags["continuous"] is False:
                changed |= put(flags, "uniformly_continuous", False, "discontinuity")
            if flags["uniformly_continuous"] is True and tri["one"] == "holds":
                changed |= put(tri, "margin_one", "holds", "uniform continuity with the segment condition")
            if tri["zero"] == "holds":
                changed |= put(flags, "finite_measure_sublevel", True, "zero holds")
            if flags["finite_measure_sublevel"] is True or flags["periodic_superset"] is True:
                changed |= put(tri, "dd", "holds", "a structural sufficient condition")
        return replace(self, **tri, **flags)


def _exp(rule: str) -> StabilityClass:
    return exponential((RULES[rule],))


def _poly(rate, rule: str) -> StabilityClass:
    return polynomial(rate, (RULES[rule],))


def derivations(facts: Facts) -> tuple[list[StabilityClass], set[str], list[str]]:
    """Every positive conclusion, the excluded tags, and the rules that excluded them."""
    f = facts.completed()
    s, d = _exact(f.s), f.d
    pos: list[StabilityClass] = []
    excluded: set[str] = set()
    neg_rules: list[str] = []

    if f.dd == "holds":
        pos.append(logarithmic(s / 2, (RULES["ball-log"],)))
    if f.dd == "fails":
        excluded.update(STABLE_TAGS)
        neg_rules.append(RULES["ball-necessary"])
    if f.zero == "holds":
        pos.append(_exp("full-measure-exp"))
    if s < 2 and f.zero == "fails":
        excluded.add("Exponential")
        neg_rules.append(RULES["fractional-needs-full-measure"])
    if d == 1 and f.one == "holds":
        pos.append(_exp("segment-1d") if s >= 2 else _poly(s / (4 - 2 * s), "segment-1d"))
    if d >= 2 and f.margin_one == "holds":
        pos.append(_exp("segment-margin") if s >= 2 else _poly(s / (4 - 2 * s), "segment-margin"))
    if d >= 2 and s <= 2 and f.continuous is True and f.one == "fails":
        excluded.add("Exponential")
        neg_rules.append(RULES["segment-necessary"])
    if f.finite_measure_sublevel is True:
        pos.append(extrapolate(_exp("finite-measure"), 2 * d, s) if s < 2 * d else _exp("finite-measure"))
    if f.periodic_superset is True:
        pos.append(extrapolate(_exp("periodic-superset"), 4, s) if s < 4 else _exp("periodic-superset"))
    return pos, excluded, neg_rules


def classify(facts: Facts) -> StabilityClass:
    """Strongest class derivable from the encoded rules, with provenance."""
    pos, excluded, neg_rules = derivations(facts)
    for c in pos:
        if c.tag in excluded:
            raise ContradictoryFacts(f"facts imply {c.tag} and exclude it at the same time")
    excl = tuple(t for t in STABLE_TAGS if t in excluded)
    notes: list[str] = []
    f = facts.completed()
    if not pos:
        if set(STABLE_TAGS) <= excluded:
            notes.append("not o(1) stable")
        return StabilityClass("Unknown", provenance=tuple(neg_rules), excluded=excl, notes=tuple(notes))
    best = max(pos, key=lambda c: c.strength)
    others = [p for c in pos if c is not best for p in c.provenance if p not in best.provenance]
    prov = best.provenance + tuple(dict.fromkeys(others)) + tuple(neg_rules)
    if best.tag == "Logarithmic" and "Exponential" not in excluded and f.d >= 2:
        notes.append(OPEN_LARGE_S)
    return replace(best, provenance=prov, excluded=excl, notes=tuple(notes))


# ---------------------------------------------------------------------------
# elementary inequalities behind the extrapolation
# ---------------------------------------------------------------------------


def concave_power_gap_bound(a1: float, a2: float, r: float) -> float:
    """Upper bound ``((a1 + a2)/2)^(r-1) |a1 - a2|`` for ``|a1^r - a2^r|``, 0 < r <= 1."""
    if not 0 < r <= 1:
        raise ValueError("needs 0 < r <= 1")
    if a1 == a2:
        return 0.0
    return ((a1 + a2) / 2) ** (r - 1) * abs(a1 - a2)


def convex_power_gap_bound(a1: float, a2: float, r: float) -> float:
    """Upper bound ``r max(a1, a2)^(r-1) |a1 - a2|`` for ``|a1^r - a2^r|``, r > 1."""
    if not r > 1:
        raise ValueError("needs r > 1")
    return r * max(a1, a2) ** (r - 1) * abs(a1 - a2)


def symbol_gap_bound(xi_sq: float, lam: float, s: float, s0: float) -> tuple[float, float]:
    """Compare half-symbol distances at orders ``s0 <= s``.

    Returns ``(lhs, rhs)`` with ``lhs = |w^(s0/4) - lam^(s0/s)|`` and
    ``rhs = ((1 + lam)/2)^(s0/s - 1) |w^(s/4) - lam|``, ``w = xi_sq + 1``;
    the inequality ``lhs <= rhs`` holds for ``lam >= 0``.
    """
    if not 0 < s0 <= s:
        raise ValueError("needs 0 < s0 <= s")
    w = xi_sq + 1.0
    lhs = abs(w ** (s0 / 4) - lam ** (s0 / s))
    rhs = ((1 + lam) / 2) ** (s0 / s - 1) * abs(w ** (s / 4) - lam)
    return lhs, rhs


def transferred_halfwidth(mu0: float, s: float, s0: float) -> float:
    """``min(mu0 s / s0, 1)``: base half-width of the annulus at the lower order."""
    return min(mu0 * s / s0, 1.0)


# ---------------------------------------------------------------------------
# constant ledger
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LedgerEntry:
    value: float
    rule: str | None = None
    formula: str | None = None
    inputs: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"value": self.value, "rule": self.rule, "formula": self.formula, "inputs": list(self.inputs)}


class MissingInputs(KeyError):
    def __init__(self, rule: str, names: list[str]):
        self.rule = rule
        self.names = names
        super().__init__(f"rule {rule!r} is missing inputs: {', '.join(names)}")


@dataclass(frozen=True)
class ConstantLedger:
    """Named constants; derived entries record their rule, formula and inputs.

    Names used by the rules:

    ``resolvent_constant``          best C in |F| <= C |(A - i lam) F|
    ``growth_prefactor``, ``decay_rate``  M and omega in |T(t)| <= M exp(-omega t)
    ``halfwave_shift_constant``     weight of |(Lam - lam) f| in a sum-form bound
    ``halfwave_damping_constant``   weight of the damping term in that bound
    ``fourier_tail_constant``       weight of |hat f| off a frequency set
    ``onesided_constant``           best C in |f| <= C |B f| on a frequency set
    ``annihilation_constant``       strong annihilation constant of a pair
    ``sublevel_threshold``          eps with S = {a < eps}
    ``annulus_halfwidth``           mu of the frequency annulus
    ``damping_sup``                 sup of a
    ``damping_op_norm``             operator norm of B (sqrt of sup a for B = sqrt(a))
    ``spectral_parameter``          lambda
    """

    entries: Mapping[str, LedgerEntry] = field(default_factory=dict)

    @classmethod
    def of(cls, **values: float) -> "ConstantLedger":
        return cls({k: LedgerEntry(float(v)) for k, v in values.items()})

    def __getitem__(self, name: str) -> float:
        return self.entries[name].value

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def entry(self, name: str) -> LedgerEntry:
        return self.entries[name]

    def with_values(self, **values: float) -> "ConstantLedger":
        new = dict(self.entries)
        new.update({k: LedgerEntry(float(v)) for k, v in values.items()})
        return ConstantLedger(new)

    def to_dict(self) -> dict:
        return {k: e.to_dict() for k, e in sorted(self.entries.items())}


@dataclass(frozen=True)
class ChainRule:
    inputs: tuple[str, ...]
    outputs: dict[str, str]  # name -> formula text
    compute: callable


def _r(inputs, outputs, compute):
    return ChainRule(tuple(inputs), dict(outputs), compute)


def _from_halfwave_b(v):
    c1, c2, b, lam = v["halfwave_shift_constant"], v["halfwave_damping_constant"], v["damping_op_norm"], v["spectral_parameter"]
    c3 = max(c1, (1 + abs(lam)) ** -1 * (1 + c2 * b))
    return {"halfwave_combined_constant": c3, "resolvent_constant": 2 * (math.sqrt(2) * c3 + 2 * (c2 + c3 * b) ** 2)}


def _from_halfwave_sublevel(v):
    c1, c2 = v["halfwave_shift_constant"], v["halfwave_damping_constant"]
    eps, sup, lam = v["sublevel_threshold"], v["damping_sup"], v["spectral_parameter"]
    c3 = max(c1, (1 + abs(lam)) ** -1 * (1 + c2))
    return {
        "halfwave_combined_constant": c3,
        "resolvent_constant": 2 * (math.sqrt(2) * c3 + 2 * (eps**-0.5 * c2 + c3 * sup**0.5) ** 2),
    }


def _exp_from_annihilation(v):
    c, eps, mu, sup = v["annihilation_constant"], v["sublevel_threshold"], v["annulus_halfwidth"], v["damping_sup"]
    inv = 8 * (1 + 1 / eps + sup) * (1 + 1 / mu) ** 2 * (1 + c)
    return {"inverse_decay_rate": inv, "decay_rate": 1 / inv, "growth_prefactor": math.exp(math.pi / 2)}


def _resolvent_from_annihilation(v):
    c, eps, mu, sup = v["annihilation_constant"], v["sublevel_threshold"], v["annulus_halfwidth"], v["damping_sup"]
    return {
        "halfwave_shift_constant": c / mu,
        "halfwave_damping_constant": c,
        "resolvent_constant": 8 * (1 + 1 / mu) ** 2 * (1 + 1 / eps + sup) * (1 + c) ** 2,
    }


def _annihilation_from_resolvent(v):
    c0, sup = v["resolvent_constant"], v["damping_sup"]
    return {
        "annihilation_constant": 2 * (1 + math.sqrt(2) * c0 * sup),
        "sublevel_threshold": 1 / (2 * math.sqrt(2) * c0),
        "annulus_halfwidth": 1 / (2 * c0),
    }


CHAIN_RULES: dict[str, ChainRule] = {
    "exp_from_resolvent": _r(
        ["resolvent_constant"],
        {"growth_prefactor": "exp(pi/2)", "decay_rate": "1/resolvent_constant"},
        lambda v: {"growth_prefactor": math.exp(math.pi / 2), "decay_rate": 1 / v["resolvent_constant"]},
    ),
    "resolvent_from_exp": _r(
        ["growth_prefactor", "decay_rate"],
        {"resolvent_constant": "growth_prefactor/decay_rate"},
        lambda v: {"resolvent_constant": v["growth_prefactor"] / v["decay_rate"]},
    ),
    "exp_from_annihilation": _r(
        ["annihilation_constant", "sublevel_threshold", "annulus_halfwidth", "damping_sup"],
        {
            "inverse_decay_rate": "8*(1+1/eps+sup a)*(1+1/mu)^2*(1+C)",
            "decay_rate": "1/inverse_decay_rate",
            "growth_prefactor": "exp(pi/2)",
        },
        _exp_from_annihilation,
    ),
    "halfwave_from_resolvent": _r(
        ["resolvent_constant", "damping_op_norm"],
        {"halfwave_shift_constant": "C", "halfwave_damping_constant": "C*|B|/sqrt(2)"},
        lambda v: {
            "halfwave_shift_constant": v["resolvent_constant"],
            "halfwave_damping_constant": v["resolvent_constant"] * v["damping_op_norm"] / math.sqrt(2),
        },
    ),
    "resolvent_from_halfwave": _r(
        ["halfwave_shift_constant", "halfwave_damping_constant", "damping_op_norm", "spectral_parameter"],
        {
            "halfwave_combined_constant": "max(C1, (1+|lam|)^-1*(1+C2*|B|))",
            "resolvent_constant": "2*(sqrt(2)*C3 + 2*(C2 + C3*|B|)^2)",
        },
        _from_halfwave_b,
    ),
    "onesided_from_halfwave": _r(
        ["halfwave_shift_constant", "halfwave_damping_constant"],
        {"onesided_constant": "2*C2", "annulus_halfwidth": "1/(2*C1)"},
        lambda v: {
            "onesided_constant": 2 * v["halfwave_damping_constant"],
            "annulus_halfwidth": 1 / (2 * v["halfwave_shift_constant"]),
        },
    ),
    "halfwave_from_onesided": _r(
        ["onesided_constant", "annulus_halfwidth", "damping_op_norm"],
        {"halfwave_shift_constant": "(1 + C*|B|)/mu", "halfwave_damping_constant": "C"},
        lambda v: {
            "halfwave_shift_constant": (1 + v["onesided_constant"] * v["damping_op_norm"]) / v["annulus_halfwidth"],
            "halfwave_damping_constant": v["onesided_constant"],
        },
    ),
    "split_from_onesided": _r(
        ["onesided_constant", "damping_op_norm"],
        {"fourier_tail_constant": "1 + C*|B|", "halfwave_damping_constant": "C"},
        lambda v: {
            "fourier_tail_constant": 1 + v["onesided_constant"] * v["damping_op_norm"],
            "halfwave_damping_constant": v["onesided_constant"],
        },
    ),
    "onesided_from_split": _r(
        ["halfwave_damping_constant"],
        {"onesided_constant": "C2"},
        lambda v: {"onesided_constant": v["halfwave_damping_constant"]},
    ),
    "resolvent_from_sublevel_halfwave": _r(
        ["halfwave_shift_constant", "halfwave_damping_constant", "sublevel_threshold", "damping_sup", "spectral_parameter"],
        {
            "halfwave_combined_constant": "max(C1, (1+|lam|)^-1*(1+C2))",
            "resolvent_constant": "2*(sqrt(2)*C3 + 2*(eps^-1/2*C2 + C3*sup(a)^1/2)^2)",
        },
        _from_halfwave_sublevel,
    ),
    "annihilation_from_resolvent": _r(
        ["resolvent_constant", "damping_sup"],
        {
            "annihilation_constant": "2*(1 + sqrt(2)*C*sup a)",
            "sublevel_threshold": "1/(2*sqrt(2)*C)",
            "annulus_halfwidth": "1/(2*C)",
        },
        _annihilation_from_resolvent,
    ),
    "resolvent_from_annihilation": _r(
        ["annihilation_constant", "sublevel_threshold", "annulus_halfwidth", "damping_sup"],
        {
            "halfwave_shift_constant": "C/mu",
            "halfwave_damping_constant": "C",
            "resolvent_constant": "8*(1+1/mu)^2*(1+1/eps+sup a)*(1+C)^2",
        },
        _resolvent_from_annihilation,
    ),
    "poly_order_from_halfwave_exponents": _r(
        ["overall_growth_exponent", "shift_growth_exponent"],
        {"poly_order": "2*(p1 + p2)"},
        lambda v: {"poly_order": 2 * (v["overall_growth_exponent"] + v["shift_growth_exponent"])},
    ),
    "halfwave_exponents_from_poly_order": _r(
        ["poly_order"],
        {"overall_growth_exponent": "p", "shift_growth_exponent": "0"},
        lambda v: {"overall_growth_exponent": v["poly_order"], "shift_growth_exponent": 0.0},
    ),
    "poly_order_from_annihilation_exponents": _r(
        ["threshold_decay_exponent", "halfwidth_decay_exponent", "constant_growth_exponent"],
        {"poly_order": "max(p1, 2*p2) + 2*p3"},
        lambda v: {
            "poly_order": max(v["threshold_decay_exponent"], 2 * v["halfwidth_decay_exponent"])
            + 2 * v["constant_growth_exponent"]
        },
    ),
    "annihilation_exponents_from_poly_order": _r(
        ["poly_order"],
        {"threshold_decay_exponent": "p", "halfwidth_decay_exponent": "p", "constant_growth_exponent": "p"},
        lambda v: {
            "threshold_decay_exponent": v["poly_order"],
            "halfwidth_decay_exponent": v["poly_order"],
            "constant_growth_exponent": v["poly_order"],
        },
    ),
}


_NONNEGATIVE = {"damping_sup", "damping_op_norm", "poly_order"}


def constant_chain(ledger: ConstantLedger, rule: str) -> ConstantLedger:
    """Apply a named propagation rule and return the extended ledger."""
    try:
        spec = CHAIN_RULES[rule]
    except KeyError:
        raise ValueError(f"unknown rule {rule!r}; known: {', '.join(sorted(CHAIN_RULES))}") from None
    missing = [n for n in spec.inputs if n not in ledger]
    if missing:
        raise MissingInputs(rule, missing)
    vals = {n: ledger[n] for n in spec.inputs}
    for n, x in vals.items():
        if n == "spectral_parameter":
            ok = math.isfinite(x)
        elif n in _NONNEGATIVE or n.endswith("exponent"):
            ok = math.isfinite(x) and x >= 0
        else:
            ok = math.isfinite(x) and x > 0
        if not ok:
            raise ValueError(f"input {n}={x} is out of range for rule {rule!r}")
    out = spec.compute(vals)
    new = dict(ledger.entries)
    for name, value in out.items():
        new[name] = LedgerEntry(float(value), rule, spec.outputs[name], spec.inputs)
    return ConstantLedger(new)
