import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from metrilog import syntax as sx
from metrilog.core import MetricStructure, Modulus, PredicateSymbol, Signature, check_all_moduli, validate_metric
from metrilog.semantics import evaluate
from metrilog.ultraproduct import (
    FRECHET,
    ConstantTail,
    ConvergentTail,
    NotComputable,
    Principal,
    StructureSequence,
    ValueSequence,
    check_claim3,
    check_tail,
    ultraproduct,
    value_limit,
    verify_isomorphism,
    well_formedness,
)

from helpers import SIG_SEQ, random_sentence, random_sequence

SIG_P = Signature(predicates=(PredicateSymbol("P", 1, Modulus.identity()),))


def one_point(p, name="M"):
    return MetricStructure(SIG_P, ("a",), {}, predicates={"P": {"a": F(p)}}, name=name)


SIGMA = sx.Sup("x", sx.Pred("P", (sx.Var("x"),)))


class TestValueLimits:
    def test_principal_picks_a_coordinate(self):
        seq = ValueSequence((F(0), F(1, 2)), ConstantTail(F(1)))
        assert value_limit(seq, Principal(1)) == F(1, 2)
        assert value_limit(seq, Principal(7)) == 1

    def test_frechet_uses_the_tail(self):
        seq = ValueSequence((F(0), F(1, 2)), ConstantTail(F(1)))
        assert value_limit(seq, FRECHET) == 1

    def test_frechet_on_finite_family_is_not_computable(self):
        with pytest.raises(NotComputable):
            value_limit(ValueSequence((F(0), F(1))), FRECHET)

    def test_convergent_tail(self):
        tail = ConvergentTail(lambda n: F(1) - F(1, n + 1), F(1), rate=lambda eps: int(1 / eps))
        assert check_tail(tail)
        assert value_limit(ValueSequence((), tail), FRECHET) == 1
        wrong = ConvergentTail(lambda n: F(1, 2), F(1), rate=lambda eps: 0)
        assert not check_tail(wrong)

    def test_values_must_lie_in_unit_interval(self):
        with pytest.raises(ValueError):
            ValueSequence((F(3, 2),))
        with pytest.raises(ValueError):
            Principal(-1)


class TestClaim3Examples:
    def test_principal_on_family(self):
        seq = StructureSequence.family([one_point(0), one_point(F(1, 2)), one_point(1)])
        report = check_claim3(seq, Principal(1), SIGMA)
        assert report.equal and report.ultraproduct_value == F(1, 2)

    def test_frechet_on_eventually_constant(self):
        seq = StructureSequence.eventually([one_point(0), one_point(F(1, 2))], one_point(1))
        report = check_claim3(seq, FRECHET, SIGMA)
        assert report.equal and report.limit_value == 1

    def test_frechet_on_family(self):
        seq = StructureSequence.family([one_point(0), one_point(1)])
        with pytest.raises(NotComputable):
            check_claim3(seq, FRECHET, SIGMA)

    def test_principal_out_of_range(self):
        seq = StructureSequence.family([one_point(0)])
        with pytest.raises(ValueError):
            ultraproduct(seq, Principal(3))

    def test_mixed_signatures_rejected(self):
        other = MetricStructure(Signature(), ("a",), {})
        with pytest.raises(ValueError):
            StructureSequence.family([one_point(0), other])


class TestConstruction:
    def test_zero_distance_points_collapse(self):
        m = MetricStructure(SIG_P, ("a", "b", "c"),
                            {("a", "b"): F(0), ("a", "c"): F(1, 2), ("b", "c"): F(1, 2)},
                            predicates={"P": {"a": F(1, 4), "b": F(1, 4), "c": F(3, 4)}})
        result = ultraproduct(StructureSequence.family([m]), Principal(0))
        assert result.structure.points == ("[a]", "[c]")
        assert result.classes["[a]"] == ("a", "b")
        assert verify_isomorphism(result) == []
        assert validate_metric(result.structure).ok

    def test_quotient_requires_invariance(self):
        m = MetricStructure(SIG_P, ("a", "b"), {("a", "b"): F(0)}, predicates={"P": {"a": F(0), "b": F(1)}})
        with pytest.raises(ValueError, match="not invariant"):
            ultraproduct(StructureSequence.family([m]), Principal(0))

    def test_broken_witness_is_reported(self):
        seq = StructureSequence.family([MetricStructure(SIG_P, ("a", "b"), {("a", "b"): F(1)},
                                                        predicates={"P": {"a": F(0), "b": F(1)}})])
        result = ultraproduct(seq, Principal(0))
        result.witness = {"[a]": "b", "[b]": "a"}
        assert any("differs" in p for p in verify_isomorphism(result))

    def test_families_and_constants_carry_over(self):
        rng = random.Random(5)
        seq = random_sequence(rng)
        result = ultraproduct(seq, FRECHET)
        assert verify_isomorphism(result) == []
        assert set(result.structure.families) == {"e"}


class TestRandomised:
    @settings(max_examples=60, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_claim3_both_specs(self, rng):
        seq = random_sequence(rng)
        sigma = random_sentence(rng, 4, SIG_SEQ)
        for spec in (Principal(rng.randrange(len(seq.prefix) + 2)), FRECHET):
            assert check_claim3(seq, spec, sigma).equal

    @settings(max_examples=60, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_well_formed_and_isomorphic(self, rng):
        seq = random_sequence(rng)
        for spec in (Principal(rng.randrange(len(seq.prefix) + 2)), FRECHET):
            result = ultraproduct(seq, spec)
            assert well_formedness(result.structure) == []
            assert not any(check_all_moduli(result.structure).values())
            assert verify_isomorphism(result) == []

    @settings(max_examples=30, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_formula_values_transfer_through_witness(self, rng):
        seq = random_sequence(rng)
        result = ultraproduct(seq, FRECHET)
        phi = sx.Pred("P", (sx.Var("x"),))
        for up, mp in result.witness.items():
            assert evaluate(result.structure, phi, {"x": up}) == evaluate(result.source, phi, {"x": mp})
