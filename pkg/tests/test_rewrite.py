"""Tests for relation files, matching, rewriting, and the simplifiers."""

import random

import pytest

from frobcube.diagram import (
    Box,
    Cap,
    Cross,
    Cup,
    Diagram,
    Id,
    check_consistency,
    closed_components,
)
from frobcube.evaluator import evaluate, morphism_equal
from frobcube.polyring import Polynomial, parse_polynomial
from frobcube.rewrite import (
    DiagramSum,
    NoMatch,
    RewriteError,
    RuleSet,
    apply_rule,
    check_relations,
    eval_combination,
    find_matches,
    load_relations,
    random_one_color_closed,
    random_two_color_diagram,
    reduce_one_color_closed,
    relation,
    simplify_two_color,
)

RULE_NAMES = {
    "zigzag-s",
    "zigzag-z",
    "cross-cyclic-trace",
    "cross-cyclic-mult",
    "box-merge",
    "box-slide",
    "circle-cw",
    "circle-ccw",
    "splitting",
    "r2-oriented",
    "r2-antiparallel-sum",
    "r2-antiparallel-sum-box",
    "r2-antiparallel-box",
    "r3-oriented",
    "r3-box",
}

ONE_COLOR_RULES = {
    "box-unit",
    "box-merge",
    "box-slide",
    "zigzag-s",
    "zigzag-z",
    "circle-cw",
    "circle-ccw",
    "splitting",
}


def poly(text, nvars=1):
    return parse_polynomial(text, nvars)


def closed_val(cube, d):
    return evaluate(cube, d).closed_value()


def ccw_circle(color, region=frozenset(), interior=None):
    rows = [[Cup(color, False)]]
    if interior is not None:
        rows.append([Id(color, True), interior, Id(color, False)])
    rows.append([Cap(color, False)])
    return Diagram(region, rows)


def cw_circle(color, region, interior=None):
    rows = [[Cup(color, True)]]
    if interior is not None:
        rows.append([Id(color, False), interior, Id(color, True)])
    rows.append([Cap(color, True)])
    return Diagram(region, rows)


class TestLoading:
    def test_every_rule_loads(self):
        assert set(load_relations()) == RULE_NAMES

    def test_side_boundaries_agree(self):
        for rule in RuleSet.default():
            assert rule.lhs.bottom == rule.rhs.bottom
            assert rule.lhs.top == rule.rhs.top
            assert rule.lhs.colors == rule.rhs.colors

    def test_unknown_relation(self):
        with pytest.raises(RewriteError):
            relation("no-such-rule")

    def test_reversed_round_trip(self):
        r = relation("r2-oriented")
        back = r.reversed().reversed()
        assert back.lhs.pattern == r.lhs.pattern
        assert back.rhs.pattern == r.rhs.pattern

    def test_reversing_one_directional_rule_fails(self):
        with pytest.raises(RewriteError):
            relation("circle-ccw").reversed()

    def test_rotate_involution(self):
        r = relation("zigzag-s")
        twice = r.rotate180().rotate180()
        assert twice.lhs.pattern == r.lhs.pattern

    def test_guards(self):
        assert relation("r3-box").guards == ("star", "mu-regular", "triple-ratio")
        assert relation("box-merge").guards == ()

    def test_ruleset_lookup(self):
        rs = RuleSet.default()
        assert len(rs) == len(RULE_NAMES)
        assert rs.get("splitting").name == "splitting"


class TestDiagramSum:
    def test_like_terms_combine(self):
        d = ccw_circle("c")
        s = DiagramSum([(1, d), (2, d)])
        assert len(s) == 1
        assert s.terms[0][0] == 3

    def test_zero_terms_drop(self):
        d = ccw_circle("c")
        assert len(DiagramSum([(1, d), (-1, d)])) == 0

    def test_order_insensitive_equality(self):
        a = ccw_circle("c")
        b = Diagram(frozenset(), [[Box(poly("x1"))]])
        assert DiagramSum([(1, a), (2, b)]) == DiagramSum([(2, b), (1, a)])

    def test_scale_and_add(self):
        d = ccw_circle("c")
        s = DiagramSum.single(d).scale(3) + DiagramSum.single(d, 2)
        assert s.terms[0][0] == 5

    def test_map_diagrams_flattens(self):
        a = ccw_circle("c")
        b = Diagram(frozenset(), [[Box(poly("x1"))]])
        s = DiagramSum.single(a, 2)
        image = s.map_diagrams(lambda _: DiagramSum([(3, b)]))
        assert image == DiagramSum([(6, b)])


class TestMatching:
    def test_circle_rule_matches_plain_circle(self, univariate):
        d = ccw_circle("c", interior=Box(Polynomial.one(1)))
        matches = find_matches(univariate, d, relation("circle-ccw"))
        assert len(matches) == 1

    def test_no_match_on_wrong_orientation(self, univariate):
        d = cw_circle("c", frozenset({"c"}), interior=Box(Polynomial.one(1)))
        assert find_matches(univariate, d, relation("circle-ccw")) == []

    def test_apply_at_bad_position_raises(self, univariate):
        d = ccw_circle("c", interior=Box(Polynomial.one(1)))
        with pytest.raises(NoMatch):
            apply_rule(univariate, d, relation("circle-cw"), (0, 0))

    def test_box_slide_requires_membership(self, soergel3):
        # sliding left to right across an up wire moves the box into
        # the smaller ring, which x1 does not belong to
        d = Diagram.from_events(
            frozenset(),
            (("s1", True),),
            [(Box(poly("x1", 3)), 0)],
        )
        rule = relation("box-slide")
        found = find_matches(soergel3, d, rule)
        assert found
        for m in found:
            with pytest.raises(NoMatch):
                apply_rule(soergel3, d, rule, m)

    def test_box_slide_symmetric_content_moves(self, soergel3):
        sym = poly("x1 + x2", 3)
        d = Diagram.from_events(
            frozenset(),
            (("s1", True),),
            [(Box(sym), 1)],
        )
        rule = relation("box-slide").reversed()
        matches = find_matches(soergel3, d, rule)
        assert matches
        out = apply_rule(soergel3, d, rule, matches[0])
        assert len(out) == 1
        assert out.terms[0][1].events() == [(Box(sym), 0)]


class TestApplySoundness:
    def test_every_match_preserves_evaluation(self, soergel3):
        rules = []
        for r in RuleSet.default():
            rules.append(r)
            if r.bidirectional:
                rules.append(r.reversed())
        applied = 0
        for t in range(6):
            rng = random.Random(f"sound-{t}")
            d = random_two_color_diagram(soergel3, ("s1", "s2"), rng, max_slices=8)
            base = evaluate(soergel3, d)
            for r in rules:
                for m in find_matches(soergel3, d, r):
                    try:
                        out = apply_rule(soergel3, d, r, m)
                    except NoMatch:
                        continue
                    applied += 1
                    assert morphism_equal(base, eval_combination(soergel3, out)), (
                        t,
                        r.name,
                    )
        assert applied > 25


class TestRelationSuite:
    def test_univariate(self, univariate):
        report = check_relations(univariate)
        assert report.passed, report.format_text()

    def test_soergel2(self, soergel2):
        report = check_relations(soergel2)
        assert report.passed, report.format_text()

    def test_soergel3(self, soergel3):
        report = check_relations(soergel3)
        assert report.passed, report.format_text()

    def test_deterministic_report(self, soergel2):
        a = check_relations(soergel2, seed=5)
        b = check_relations(soergel2, seed=5)
        assert a.to_dict() == b.to_dict()


class TestOneColorReduction:
    def test_empty_ccw_circle(self, univariate):
        out = reduce_one_color_closed(univariate, ccw_circle("c"))
        assert out.events() == [(Box(poly("x1")), 0)]

    def test_ccw_circle_with_box(self, univariate):
        d = ccw_circle("c", interior=Box(poly("x1^2")))
        out = reduce_one_color_closed(univariate, d)
        assert out.events() == [(Box(poly("x1^3")), 0)]

    def test_cw_circle_kills_constants(self, univariate):
        d = cw_circle("c", frozenset({"c"}), interior=Box(Polynomial.one(1)))
        out = reduce_one_color_closed(univariate, d)
        assert out.events() == [(Box(Polynomial.zero(1)), 0)]

    def test_cw_circle_traces_odd_part(self, univariate):
        d = cw_circle("c", frozenset({"c"}), interior=Box(poly("x1^3")))
        out = reduce_one_color_closed(univariate, d)
        assert out.events() == [(Box(poly("2*x1^2")), 0)]

    def test_open_diagram_rejected(self, univariate):
        d = Diagram(frozenset(), [[Id("c", True)]])
        with pytest.raises(RewriteError):
            reduce_one_color_closed(univariate, d)

    def test_crossing_rejected(self, soergel3):
        d = Diagram.from_events(
            frozenset(),
            (("s1", True), ("s2", True)),
            [(Cross("s1", "s2", "up"), 0), (Cross("s2", "s1", "up"), 0)],
        )
        with pytest.raises(RewriteError):
            reduce_one_color_closed(soergel3, d)

    def test_random_piles_reduce(self, univariate):
        for t in range(15):
            rng = random.Random(f"pile-{t}")
            d = random_one_color_closed(univariate, "c", rng)
            audit = []
            out = reduce_one_color_closed(univariate, d, audit)
            events = out.events()
            assert len(events) == 1 and isinstance(events[0][0], Box)
            assert events[0][0].poly == closed_val(univariate, d)
            assert set(audit) <= ONE_COLOR_RULES

    def test_random_piles_reduce_soergel(self, soergel3):
        for t in range(8):
            rng = random.Random(f"spile-{t}")
            color = ("s1", "s2")[t % 2]
            d = random_one_color_closed(soergel3, color, rng)
            out = reduce_one_color_closed(soergel3, d)
            assert out.events()[0][0].poly == closed_val(soergel3, d)


class TestTwoColorSimplify:
    def test_pierced_circle(self, soergel3):
        events = [
            (Cup("s1", False), 1),
            (Cross("s2", "s1", "up"), 0),
            (Cross("s2", "s1", "right"), 1),
            (Cap("s1", False), 0),
        ]
        d = Diagram.from_events(frozenset(), (("s2", True),), events)
        check_consistency(d, soergel3)
        out = simplify_two_color(soergel3, d)
        assert all(not closed_components(term) for _, term in out)
        assert morphism_equal(
            evaluate(soergel3, d), eval_combination(soergel3, out)
        )

    def test_interleaved_circles_need_interchange(self, soergel3):
        # two disjoint circles whose events alternate in the slicing;
        # no window is contiguous until an interchange reorders them
        events = [
            (Cup("s1", False), 0),
            (Cup("s2", False), 2),
            (Cap("s1", False), 0),
            (Cap("s2", False), 0),
        ]
        d = Diagram.from_events(frozenset(), (), events)
        check_consistency(d, soergel3)
        out = simplify_two_color(soergel3, d)
        assert len(out) == 1
        coeff, term = out.terms[0]
        assert coeff == 1
        assert term.events() == [(Box(closed_val(soergel3, d)), 0)]

    def test_open_diagram_fixed_point(self, soergel3):
        d = Diagram(frozenset(), [[Id("s1", True), Id("s2", True)]])
        out = simplify_two_color(soergel3, d)
        assert len(out) == 1
        assert not out.terms[0][1].events()

    def test_closed_input_gives_value_box(self, soergel3):
        d = ccw_circle("s1").beside(ccw_circle("s2"))
        out = simplify_two_color(soergel3, d)
        assert len(out) == 1
        assert out.terms[0][1].events() == [(Box(closed_val(soergel3, d)), 0)]

    def test_random_diagrams(self, soergel3):
        for t in range(25):
            rng = random.Random(f"two-{t}")
            closed = t % 3 == 0
            d = random_two_color_diagram(
                soergel3, ("s1", "s2"), rng, max_slices=14, closed=closed
            )
            out = simplify_two_color(soergel3, d)
            assert all(not closed_components(term) for _, term in out), t
            assert morphism_equal(
                evaluate(soergel3, d), eval_combination(soergel3, out)
            ), t
            if closed:
                assert len(out) == 1
                assert out.terms[0][1].events() == [
                    (Box(closed_val(soergel3, d)), 0)
                ], t

    def test_deterministic(self, soergel3):
        d1 = random_two_color_diagram(
            soergel3, ("s1", "s2"), random.Random("det"), closed=True
        )
        d2 = random_two_color_diagram(
            soergel3, ("s1", "s2"), random.Random("det"), closed=True
        )
        assert d1 == d2
        assert simplify_two_color(soergel3, d1) == simplify_two_color(soergel3, d2)


class TestGenerators:
    def test_one_color_generator_consistent(self, univariate):
        for t in range(10):
            d = random_one_color_closed(univariate, "c", random.Random(t))
            assert d.is_closed()
            check_consistency(d, univariate)

    def test_two_color_generator_consistent(self, soergel3):
        for t in range(10):
            d = random_two_color_diagram(
                soergel3, ("s1", "s2"), random.Random(t), max_slices=14
            )
            assert len(d.slices) <= 14
            check_consistency(d, soergel3)

    def test_two_color_generator_closed_flag(self, soergel3):
        d = random_two_color_diagram(
            soergel3, ("s1", "s2"), random.Random(3), closed=True
        )
        assert d.is_closed()
