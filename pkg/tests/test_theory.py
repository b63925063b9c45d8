from __future__ import annotations

import math
from fractions import Fraction as F

import pytest

from kgstab import theory
from kgstab.theory import (
    CHAIN_RULES,
    ConstantLedger,
    ContradictoryFacts,
    Facts,
    MissingInputs,
    classify,
    constant_chain,
    exponent_q,
    extrapolate,
    strong_poly_rule,
)


def tag(**kw) -> str:
    return classify(Facts(**kw)).tag


def excluded(**kw) -> tuple:
    return classify(Facts(**kw)).excluded


# ---------------------------------------------------------------------------
# golden tables: one test per (dimension, order) regime
# ---------------------------------------------------------------------------


class TestLineBelowOrderTwo:
    s = F(1)

    def test_full_measure_gives_exponential(self):
        assert tag(d=1, s=self.s, zero="holds") == "Exponential"

    def test_exponential_needs_full_measure(self):
        assert "Exponential" in excluded(d=1, s=self.s, zero="fails", one="holds")

    def test_segment_gives_polynomial_but_not_exponential(self):
        c = classify(Facts(d=1, s=self.s, zero="fails", one="holds"))
        assert c.tag == "Polynomial" and c.rate == self.s / (4 - 2 * self.s)

    def test_without_segment_condition_nothing_decays(self):
        c = classify(Facts(d=1, s=self.s, one="fails"))
        assert c.tag == "Unknown"
        assert set(c.excluded) == set(theory.STABLE_TAGS)

    def test_ball_and_segment_conditions_coincide(self):
        f = Facts(d=1, s=self.s, dd="holds").completed()
        assert f.one == "holds"


class TestLineFromOrderTwo:
    def test_segment_gives_exponential(self):
        for s in (2, F(5, 2), 4):
            assert tag(d=1, s=s, zero="fails", one="holds") == "Exponential"

    def test_full_measure_not_needed(self):
        assert "Exponential" not in excluded(d=1, s=2, zero="fails", one="holds")

    def test_without_segment_condition_nothing_decays(self):
        assert set(excluded(d=1, s=3, one="fails")) == set(theory.STABLE_TAGS)


class TestPlaneBelowOrderTwo:
    s = F(1, 2)

    def test_full_measure_iff_exponential(self):
        assert tag(d=2, s=self.s, zero="holds") == "Exponential"
        assert "Exponential" in excluded(d=2, s=self.s, zero="fails", dd="holds")

    def test_segment_with_uniform_continuity_gives_polynomial(self):
        c = classify(Facts(d=2, s=self.s, zero="fails", one="holds", uniformly_continuous=True))
        assert c.tag == "Polynomial" and c.rate == self.s / (4 - 2 * self.s)

    def test_segment_without_continuity_only_gives_logarithmic(self):
        c = classify(Facts(d=2, s=self.s, zero="fails", one="holds", uniformly_continuous=False))
        assert c.tag == "Logarithmic"

    def test_ball_condition_iff_logarithmic(self):
        c = classify(Facts(d=2, s=self.s, one="fails", dd="holds"))
        assert c.tag == "Logarithmic" and c.rate == self.s / 2
        assert set(excluded(d=2, s=self.s, dd="fails")) == set(theory.STABLE_TAGS)

    def test_ball_condition_does_not_force_segment_condition(self):
        # consistent facts: the ball condition holds while the segment one fails
        assert Facts(d=2, s=self.s, one="fails", dd="holds").completed().dd == "holds"


class TestPlaneAtOrderTwo:
    def test_segment_with_uniform_continuity_gives_exponential(self):
        assert tag(d=2, s=2, zero="fails", one="holds", uniformly_continuous=True) == "Exponential"

    def test_exponential_forces_segment_for_continuous_damping(self):
        c = classify(Facts(d=2, s=2, one="fails", dd="holds", continuous=True))
        assert c.tag == "Logarithmic"
        assert "Exponential" in c.excluded

    def test_discontinuous_damping_does_not_exclude_exponential(self):
        assert "Exponential" not in excluded(d=2, s=2, one="fails", dd="holds", continuous=False)


class TestPlaneBetweenTwoAndFour:
    s = 3

    def test_segment_with_uniform_continuity_gives_exponential(self):
        assert tag(d=2, s=self.s, one="holds", uniformly_continuous=True) == "Exponential"

    def test_ball_condition_gives_logarithmic_with_open_note(self):
        c = classify(Facts(d=2, s=self.s, one="fails", dd="holds", continuous=True))
        assert c.tag == "Logarithmic" and c.rate == F(3, 2)
        assert "Exponential" not in c.excluded
        assert theory.OPEN_LARGE_S in c.notes


class TestPlaneFromOrderFour:
    def test_segment_with_uniform_continuity_gives_exponential(self):
        assert tag(d=2, s=4, one="holds", uniformly_continuous=True) == "Exponential"

    def test_segment_condition_not_necessary(self):
        c = classify(Facts(d=2, s=4, one="fails", dd="holds", periodic_superset=True, uniformly_continuous=True))
        assert c.tag == "Exponential"

    def test_ball_condition_iff_logarithmic(self):
        assert tag(d=2, s=6, one="fails", dd="holds") == "Logarithmic"
        assert tag(d=2, s=6, dd="fails") == "Unknown"


def test_periodic_superset_below_order_four_is_polynomial():
    c = classify(Facts(d=2, s=2, one="fails", periodic_superset=True))
    assert c.tag == "Polynomial" and c.rate == F(1, 2)


def test_finite_measure_rule():
    c = classify(Facts(d=2, s=2, finite_measure_sublevel=True))
    assert c.tag == "Polynomial" and c.rate == F(1, 2)
    assert tag(d=2, s=4, finite_measure_sublevel=True) == "Exponential"


def test_contradictory_facts_are_rejected():
    with pytest.raises(ContradictoryFacts):
        Facts(d=2, s=1, one="holds", dd="fails").completed()
    with pytest.raises(ContradictoryFacts):
        Facts(d=2, s=1, zero="holds", one="fails").completed()


def test_facts_validation():
    with pytest.raises(ValueError):
        Facts(d=0, s=1)
    with pytest.raises(ValueError):
        Facts(d=1, s=0)
    with pytest.raises(ValueError):
        Facts(d=1, s=1, one="maybe")


def test_provenance_is_recorded():
    c = classify(Facts(d=1, s=2, one="holds"))
    assert any("segment" in p for p in c.provenance)


# ---------------------------------------------------------------------------
# extrapolation
# ---------------------------------------------------------------------------


def test_exponent_q_examples():
    assert exponent_q(2, 2, 0) == 0
    assert exponent_q(1, 2, 0) == 1
    assert exponent_q(F(3, 2), 2, 0) == F(1, 3)
    assert exponent_q(1, 1, 2) == 2
    with pytest.raises(ValueError):
        exponent_q(0, 1)
    with pytest.raises(ValueError):
        exponent_q(1, 1, -1)


def test_extrapolate_exponential_down_and_up():
    exp = theory.exponential()
    assert extrapolate(exp, 4, 2).rate == F(1, 2)
    assert extrapolate(exp, 2, 5).tag == "Exponential"


def test_extrapolate_polynomial_and_logarithmic():
    poly = theory.polynomial(F(1, 2))  # p = 2
    assert extrapolate(poly, 2, 4).rate == F(4, 2 * 2 * 2)
    assert extrapolate(poly, 2, 6).rate == F(6, 2 * 2 * 2)
    assert extrapolate(poly, 2, 1).rate == 1 / (2 * exponent_q(1, 2, 4))
    log = theory.logarithmic(1)
    assert extrapolate(log, 2, 3).rate == F(3, 2)
    assert extrapolate(theory.StabilityClass("SmallO"), 1, 2).tag == "SmallO"


def test_strong_poly_rule_threshold():
    assert strong_poly_rule(1, 2, 4).tag == "Exponential"
    c = strong_poly_rule(1, 2, 3)
    assert c.tag == "Polynomial" and c.rate == 1 / (2 * exponent_q(3, 2, 1))


def test_class_validation():
    with pytest.raises(ValueError):
        theory.polynomial(0)
    with pytest.raises(ValueError):
        theory.StabilityClass("Exponential", rate=1)


# ---------------------------------------------------------------------------
# constant chains
# ---------------------------------------------------------------------------


def test_exp_from_annihilation_unit_inputs():
    led = ConstantLedger.of(annihilation_constant=1, sublevel_threshold=1, annulus_halfwidth=1, damping_sup=1)
    out = constant_chain(led, "exp_from_annihilation")
    assert out["inverse_decay_rate"] == pytest.approx(192.0)
    assert out["growth_prefactor"] == pytest.approx(math.exp(math.pi / 2))
    assert out.entry("decay_rate").rule == "exp_from_annihilation"


def test_exp_from_resolvent():
    out = constant_chain(ConstantLedger.of(resolvent_constant=4.0), "exp_from_resolvent")
    assert out["decay_rate"] == 0.25
    back = constant_chain(out, "resolvent_from_exp")
    assert back["resolvent_constant"] == pytest.approx(4 * math.exp(math.pi / 2))


def test_halfwave_round_trip_formulas():
    led = ConstantLedger.of(resolvent_constant=2.0, damping_op_norm=1.0, spectral_parameter=3.0)
    hw = constant_chain(led, "halfwave_from_resolvent")
    assert hw["halfwave_shift_constant"] == 2.0
    assert hw["halfwave_damping_constant"] == pytest.approx(math.sqrt(2))
    back = constant_chain(hw, "resolvent_from_halfwave")
    c3 = max(2.0, (1 + math.sqrt(2)) / 4)
    assert back["resolvent_constant"] == pytest.approx(2 * (math.sqrt(2) * c3 + 2 * (math.sqrt(2) + c3) ** 2))


def test_onesided_rules():
    led = ConstantLedger.of(halfwave_shift_constant=4.0, halfwave_damping_constant=3.0)
    out = constant_chain(led, "onesided_from_halfwave")
    assert out["onesided_constant"] == 6.0 and out["annulus_halfwidth"] == 0.125
    led = ConstantLedger.of(onesided_constant=2.0, annulus_halfwidth=0.5, damping_op_norm=3.0)
    out = constant_chain(led, "halfwave_from_onesided")
    assert out["halfwave_shift_constant"] == 14.0 and out["halfwave_damping_constant"] == 2.0


def test_annihilation_rules():
    led = ConstantLedger.of(annihilation_constant=1, sublevel_threshold=1, annulus_halfwidth=1, damping_sup=1)
    out = constant_chain(led, "resolvent_from_annihilation")
    assert out["resolvent_constant"] == pytest.approx(8 * 4 * 3 * 4)
    led = ConstantLedger.of(resolvent_constant=1.0, damping_sup=2.0)
    out = constant_chain(led, "annihilation_from_resolvent")
    assert out["annulus_halfwidth"] == 0.5
    assert out["sublevel_threshold"] == pytest.approx(1 / (2 * math.sqrt(2)))
    assert out["annihilation_constant"] == pytest.approx(2 * (1 + 2 * math.sqrt(2)))


def test_polynomial_exponent_rules():
    out = constant_chain(
        ConstantLedger.of(overall_growth_exponent=1, shift_growth_exponent=2), "poly_order_from_halfwave_exponents"
    )
    assert out["poly_order"] == 6
    out = constant_chain(
        ConstantLedger.of(threshold_decay_exponent=1, halfwidth_decay_exponent=2, constant_growth_exponent=1),
        "poly_order_from_annihilation_exponents",
    )
    assert out["poly_order"] == 6


def test_chain_errors():
    with pytest.raises(ValueError, match="unknown rule"):
        constant_chain(ConstantLedger(), "nope")
    with pytest.raises(MissingInputs):
        constant_chain(ConstantLedger.of(resolvent_constant=1.0), "halfwave_from_resolvent")
    with pytest.raises(ValueError, match="out of range"):
        constant_chain(ConstantLedger.of(resolvent_constant=math.inf), "exp_from_resolvent")


def test_every_rule_records_formulas():
    for name, rule in CHAIN_RULES.items():
        assert rule.outputs, name
        assert all(isinstance(v, str) and v for v in rule.outputs.values())
