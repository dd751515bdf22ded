"""Tests for path signatures and tensor elements."""

import random

import pytest

from frobcube.frobenius import MembershipError
from frobcube.polyring import Polynomial, parse_polynomial
from frobcube.tensor import (
    PathSignature,
    SignatureError,
    TensorElement,
    basis_pure_tensors,
)


def poly(text, nvars):
    return parse_polynomial(text, nvars)


class TestPathSignature:
    def test_valid_path(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s1"], ["s1", "s2"], ["s1"]])
        assert sig.slots == 3
        assert sig.step(0) == (frozenset(), "s1", True)
        assert sig.step(2) == (frozenset({"s1"}), "s2", False)
        assert sig.slot_ring(1) == frozenset({"s1"})
        assert sig.slot_ring(2) == frozenset({"s1"})

    def test_rejects_jump(self, soergel3):
        with pytest.raises(SignatureError):
            PathSignature(soergel3, [[], ["s1", "s2"]])

    def test_rejects_repeat(self, soergel3):
        with pytest.raises(SignatureError):
            PathSignature(soergel3, [["s1"], ["s1"]])

    def test_format_parse_round_trip(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s2"], ["s1", "s2"]])
        assert sig.format() == "{}->{s2}->{s1,s2}"
        again = PathSignature.parse(soergel3, sig.format())
        assert again == sig

    def test_parse_bad_literal(self, soergel3):
        with pytest.raises(SignatureError):
            PathSignature.parse(soergel3, "{->{s1}")

    def test_slot_ranks(self, univariate):
        sig = PathSignature(univariate, [[], ["c"], []])
        assert sig.slot_rank(0) == 2
        assert sig.slot_rank(1) == 1


class TestNormalization:
    def test_single_region_element(self, univariate):
        sig = PathSignature(univariate, [[]])
        t = TensorElement(sig, [((), poly("x1^2 + 1", 1))])
        assert t.normalize() == {(): poly("x1^2 + 1", 1)}

    def test_up_step_expansion(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("x1^3 + x1^2", 1)])
        assert t.normalize() == {
            (0,): poly("x1^2", 1),
            (1,): poly("x1^2", 1),
        }

    def test_even_polynomial_slides_down_step(self, univariate):
        sig = PathSignature(univariate, [[], ["c"], []])
        left = TensorElement.pure(sig, [poly("x1^2", 1), poly("1", 1)])
        right = TensorElement.pure(sig, [poly("1", 1), poly("x1^2", 1)])
        assert left == right

    def test_odd_polynomial_does_not_slide(self, univariate):
        sig = PathSignature(univariate, [[], ["c"], []])
        left = TensorElement.pure(sig, [poly("x1", 1), poly("1", 1)])
        right = TensorElement.pure(sig, [poly("1", 1), poly("x1", 1)])
        assert left != right

    def test_cancellation(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("x1", 1)])
        assert (t - t).is_zero()
        assert not t.is_zero()

    def test_middle_slide_soergel(self, soergel3):
        # a factor from the gluing ring may cross the tensor sign
        sig = PathSignature(soergel3, [[], ["s1"], []])
        g = poly("x1 + x2", 3)
        f = poly("x1", 3)
        h = poly("x2", 3)
        left = TensorElement.pure(sig, [f * g, h])
        right = TensorElement.pure(sig, [f, g * h])
        assert left == right

    def test_bilinearity(self, soergel3):
        rng = random.Random(8)
        sig = PathSignature(soergel3, [[], ["s2"], ["s1", "s2"], ["s2"]])
        terms = basis_pure_tensors(sig)
        a, b = terms[0], terms[3]
        combo = a.scale(3) + b.scale(-2)
        nf = combo.normalize()
        for key, value in a.normalize().items():
            assert nf.get(key, Polynomial.zero(3)) == value.scale(3) + b.normalize().get(
                key, Polynomial.zero(3)
            ).scale(-2)

    def test_normalized_idempotent(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s1"], ["s1", "s2"]])
        t = TensorElement.pure(sig, [poly("x1^2 + x2", 3), poly("x1*x2", 3)])
        n = t.normalized()
        assert n == t
        assert n.normalized().terms == n.terms

    def test_normalize_caches(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("x1", 1)])
        assert t.normalize() is t.normalize()


class TestMultiplyAt:
    def test_left_action(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("1", 1)])
        u = t.multiply_at(0, poly("x1", 1))
        assert u == TensorElement.pure(sig, [poly("x1", 1)])

    def test_right_action_hits_tail(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("x1", 1)])
        u = t.multiply_at(1, poly("x1^2", 1))
        assert u == TensorElement.pure(sig, [poly("x1^3", 1)])

    def test_region_membership_enforced(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("1", 1)])
        with pytest.raises(MembershipError):
            t.multiply_at(1, poly("x1", 1))

    def test_gap_range(self, univariate):
        sig = PathSignature(univariate, [[]])
        t = TensorElement(sig, [((), poly("1", 1))])
        with pytest.raises(MembershipError):
            t.multiply_at(2, poly("1", 1))

    def test_interior_gap_equivalence(self, soergel3):
        # multiplying at a gap from the gluing ring agrees on both sides
        sig = PathSignature(soergel3, [[], ["s1"], []])
        t = TensorElement.pure(sig, [poly("x1", 3), poly("x2", 3)])
        g = poly("x1 + x2", 3)
        via_gap = t.multiply_at(1, g)
        by_hand = TensorElement.pure(sig, [poly("x1", 3) * g, poly("x2", 3)])
        assert via_gap == by_hand


class TestBasisPureTensors:
    def test_counts(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s1"], ["s1", "s2"], ["s1"]])
        assert len(basis_pure_tensors(sig)) == 2 * 3 * 1

    def test_span_includes_normal_form(self, univariate):
        sig = PathSignature(univariate, [[], ["c"], []])
        basis = basis_pure_tensors(sig)
        target = TensorElement.pure(sig, [poly("x1^3", 1), poly("x1", 1)])
        nf = target.normalize()
        rebuilt = TensorElement.zero(sig)
        for b in basis:
            key = next(iter(b.normalize()))
            if key in nf:
                rebuilt = rebuilt + b.multiply_at(sig.slots, nf[key])
        assert rebuilt == target

    def test_zero_slots(self, univariate):
        sig = PathSignature(univariate, [["c"]])
        basis = basis_pure_tensors(sig)
        assert len(basis) == 1
        assert basis[0].normalize() == {(): poly("1", 1)}


class TestTextForm:
    def test_render_pure(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s1"], ["s1", "s2"]])
        t = TensorElement.pure(sig, [poly("x1", 3), poly("x1*x2", 3)])
        assert t.render() == "x1 (x) x1*x2 @ {}->{s1}->{s1,s2}"

    def test_round_trip(self, soergel3):
        sig = PathSignature(soergel3, [[], ["s1"], ["s1", "s2"]])
        t = TensorElement.pure(sig, [poly("x1 + x2", 3), poly("x1*x2", 3)])
        again = TensorElement.parse(soergel3, t.render())
        assert again == t

    def test_round_trip_sum(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement.pure(sig, [poly("x1 + 1", 1)]) + TensorElement.pure(
            sig, [poly("x1^2", 1)]
        )
        again = TensorElement.parse(univariate, t.render())
        assert again == t

    def test_tail_folds_into_last_factor(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        t = TensorElement(sig, [((poly("x1", 1),), poly("x1^2", 1))])
        assert t.render() == "x1^3 @ {}->{c}"

    def test_zero(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        z = TensorElement.zero(sig)
        assert z.render() == "0 @ {}->{c}"
        assert TensorElement.parse(univariate, z.render()).is_zero()

    def test_single_region_render(self, univariate):
        sig = PathSignature(univariate, [[]])
        t = TensorElement(sig, [((), poly("x1 - 1", 1))])
        again = TensorElement.parse(univariate, t.render())
        assert again == t

    def test_parse_wrong_arity(self, soergel3):
        with pytest.raises(SignatureError):
            TensorElement.parse(soergel3, "x1 @ {}->{s1}->{s1,s2}")

    def test_parse_missing_at(self, soergel3):
        with pytest.raises(SignatureError):
            TensorElement.parse(soergel3, "x1 (x) x2")


class TestValidation:
    def test_factor_membership(self, soergel3):
        # an upward slot starting at {s1} only accepts s1-invariants
        sig = PathSignature(soergel3, [["s1"], ["s1", "s2"]])
        with pytest.raises(MembershipError):
            TensorElement.pure(sig, [poly("x2", 3)])

    def test_tail_membership(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        with pytest.raises(MembershipError):
            TensorElement(sig, [((poly("1", 1),), poly("x1", 1))])

    def test_arity_checked(self, univariate):
        sig = PathSignature(univariate, [[], ["c"]])
        with pytest.raises(MembershipError):
            TensorElement(sig, [((), poly("1", 1))])

    def test_signature_mismatch_on_add(self, univariate):
        a = TensorElement.pure(
            PathSignature(univariate, [[], ["c"]]), [poly("1", 1)]
        )
        b = TensorElement.pure(
            PathSignature(univariate, [["c"], []]), [poly("1", 1)]
        )
        with pytest.raises(MembershipError):
            a + b
