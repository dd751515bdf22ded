"""Tests for the diagram data model, parser, and consistency checker."""

import xml.etree.ElementTree as ET

import pytest

from frobcube.diagram import (
    Box,
    Cap,
    Cross,
    Cup,
    Diagram,
    DiagramParseError,
    Id,
    InconsistentDiagram,
    check_consistency,
    closed_components,
    parse_diagram,
    render_svg,
    strand_components,
)
from frobcube.polyring import parse_polynomial


def poly(text, nvars=3):
    return parse_polynomial(text, nvars)


def circle_ccw(color="s1", region=()):
    return Diagram(region, [[Cup(color, False)], [Cap(color, False)]])


def circle_cw(color="s1", region=("s1",)):
    return Diagram(region, [[Cup(color, True)], [Cap(color, True)]])


class TestCells:
    def test_id_wires(self):
        c = Id("s1", True)
        assert c.bottom() == c.top() == (("s1", True),)

    def test_cup_cap_wires(self):
        assert Cup("s1", False).top() == (("s1", True), ("s1", False))
        assert Cup("s1", True).top() == (("s1", False), ("s1", True))
        assert Cap("s1", True).bottom() == (("s1", False), ("s1", True))
        assert Cap("s1", False).bottom() == (("s1", True), ("s1", False))

    def test_cross_wires(self):
        c = Cross("s1", "s2", "left")
        assert c.bottom() == (("s1", False), ("s2", True))
        assert c.top() == (("s2", True), ("s1", False))

    def test_cross_same_color_rejected(self):
        with pytest.raises(ValueError):
            Cross("s1", "s1", "up")

    def test_mirror_pairs(self):
        assert Cup("s1", True).mirror() == Cap("s1", True)
        assert Cap("s1", False).mirror() == Cup("s1", False)
        assert Id("s1", True).mirror() == Id("s1", False)
        assert Cross("s1", "s2", "up").mirror() == Cross("s1", "s2", "down")
        assert Cross("s1", "s2", "left").mirror() == Cross("s1", "s2", "right")

    def test_mirror_involution(self):
        cells = [
            Id("s1", True),
            Cup("s2", False),
            Cap("s1", True),
            Cross("s1", "s2", "right"),
            Box(poly("x1 + x2")),
        ]
        for cell in cells:
            assert cell.mirror().mirror() == cell


class TestConstruction:
    def test_single_identity(self):
        d = Diagram((), [[Id("s1", True)]])
        assert d.bottom_boundary == (("s1", True),)
        assert d.top_boundary == (("s1", True),)
        assert not d.is_closed()

    def test_circle_is_closed(self):
        assert circle_ccw().is_closed()

    def test_interface_mismatch(self):
        with pytest.raises(InconsistentDiagram):
            Diagram((), [[Id("s1", True)], [Id("s2", True)]])

    def test_direction_mismatch(self):
        with pytest.raises(InconsistentDiagram):
            Diagram((), [[Id("s1", True)], [Id("s1", False)]])

    def test_generic_position_split(self):
        # two cups in one row become two slices, left event first
        d = Diagram((), [[Cup("s1", False), Cup("s2", False)]])
        assert len(d.slices) == 2
        assert d.slices[0] == (Cup("s1", False),)
        assert d.slices[1] == (
            Id("s1", True),
            Id("s1", False),
            Cup("s2", False),
        )

    def test_split_keeps_identity_rows(self):
        d = Diagram((), [[Id("s1", True), Id("s2", True)]])
        assert len(d.slices) == 1

    def test_box_counts_as_event(self):
        d = Diagram((), [[Box(poly("x1")), Cup("s1", False)]])
        assert len(d.slices) == 2


class TestEvents:
    def test_round_trip(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        rebuilt = Diagram.from_events((), d.bottom_boundary, d.events())
        assert rebuilt.events() == d.events()
        assert rebuilt == d.elide_identities()

    def test_bad_offset(self):
        with pytest.raises(InconsistentDiagram):
            Diagram.from_events((), (("s1", True),), [(Cap("s1", False), 0)])

    def test_pure_identity_keeps_boundary(self):
        d = Diagram.from_events((), (("s1", True),), [])
        assert d.bottom_boundary == (("s1", True),)
        assert len(d.slices) == 1


class TestInterchange:
    def test_box_sinks_past_disjoint_cup(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Box(poly("x1")), Id("s1", True), Id("s1", False)],
            ],
        )
        norm = d.interchange_normal_form()
        assert norm.events() == [
            (Box(poly("x1")), 0),
            (Cup("s1", False), 0),
        ]

    def test_box_sinks_below_closed_component(self):
        d = Diagram.from_events(
            (),
            (),
            [
                (Cup("s1", False), 0),
                (Cap("s1", False), 0),
                (Box(poly("x2")), 0),
            ],
        )
        norm = d.interchange_normal_form()
        assert norm.events() == [
            (Box(poly("x2")), 0),
            (Cup("s1", False), 0),
            (Cap("s1", False), 0),
        ]

    def test_box_stays_in_pocket(self):
        d = Diagram.from_events(
            (),
            (),
            [
                (Cup("s1", False), 0),
                (Box(poly("x1")), 1),
                (Cap("s1", False), 0),
            ],
        )
        assert d.interchange_normal_form().events() == d.events()

    def test_boxes_keep_written_order_at_same_gap(self):
        events = [
            (Box(poly("x1")), 0),
            (Box(poly("x2")), 0),
        ]
        d = Diagram.from_events((), (), events)
        assert d.interchange_normal_form().events() == events

    def test_wire_events_keep_order(self):
        d = Diagram(
            (),
            [
                [Cup("s2", False)],
                [Cup("s1", False), Id("s2", True), Id("s2", False)],
            ],
        )
        assert d.interchange_normal_form().events() == d.events()

    def test_idempotent(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Box(poly("x1")), Id("s1", True), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        once = d.interchange_normal_form()
        assert once.interchange_normal_form() == once

    def test_nested_events_not_reordered(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Cup("s2", False), Id("s1", False)],
            ],
        )
        assert d.interchange_normal_form().events() == d.events()


class TestComposition:
    def test_stack_circle(self):
        bottom = Diagram((), [[Cup("s1", False)]])
        top = Diagram((), [[Cap("s1", False)]])
        assert bottom.stack(top) == circle_ccw()

    def test_stack_mismatch(self):
        bottom = Diagram((), [[Cup("s1", False)]])
        with pytest.raises(InconsistentDiagram):
            bottom.stack(Diagram((), [[Cap("s1", True)]]))

    def test_stack_region_mismatch(self):
        with pytest.raises(InconsistentDiagram):
            circle_ccw().stack(circle_cw())

    def test_stack_identity_elides_to_same(self):
        d = circle_ccw()
        ident = Diagram((), [])
        assert d.stack(ident).elide_identities() == d.elide_identities()

    def test_stack_associative(self):
        a = Diagram((), [[Cup("s1", False)]])
        b = Diagram((), [[Id("s1", True), Id("s1", False)]])
        c = Diagram((), [[Cap("s1", False)]])
        assert a.stack(b).stack(c) == a.stack(b.stack(c))

    def test_beside(self):
        left = Diagram((), [[Id("s1", True)]])
        right = Diagram(("s1",), [[Id("s2", True)]])
        combo = left.beside(right)
        assert combo.bottom_boundary == (("s1", True), ("s2", True))

    def test_beside_region_checked(self):
        left = Diagram((), [[Id("s1", True)]])
        with pytest.raises(InconsistentDiagram):
            left.beside(Diagram((), [[Id("s2", True)]]))

    def test_beside_pads_heights(self):
        left = circle_ccw("s1")
        right = Diagram((), [[Id("s2", True)]])
        combo = left.beside(right)
        assert len(combo.slices) == 2
        assert combo.top_boundary == (("s2", True),)

    def test_beside_resplits_events(self):
        left = Diagram((), [[Cup("s1", False)]])
        right = Diagram((), [[Cup("s2", False)]])
        combo = left.beside(right)
        assert all(
            sum(0 if isinstance(c, Id) else 1 for c in row) <= 1
            for row in combo.slices
        )


class TestRotation:
    def test_involution(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Box(poly("x1 + x2")), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        assert d.rotate180().rotate180() == d

    def test_cup_becomes_cap_same_tag(self):
        d = Diagram((), [[Cup("s1", False)]])
        r = d.rotate180()
        assert r.slices == ((Cap("s1", False),),)

    def test_crossing_flips(self):
        d = Diagram((), [[Cross("s1", "s2", "up")]])
        r = d.rotate180()
        assert r.slices == ((Cross("s1", "s2", "down"),),)

    def test_region_moves_to_other_side(self):
        d = Diagram((), [[Id("s1", True)]])
        assert d.rotate180().region == frozenset({"s1"})

    def test_rotated_diagram_consistent(self):
        d = Diagram((), [[Cross("s1", "s2", "up")]])
        check_consistency(d.rotate180())


class TestConsistency:
    def test_single_up_strand(self):
        d = Diagram((), [[Id("s1", True)]])
        labels = check_consistency(d)
        assert labels.bottom == (frozenset(), frozenset({"s1"}))
        assert labels.top == labels.bottom

    def test_parallel_same_color_up_strands(self):
        d = Diagram((), [[Id("s1", True), Id("s1", True)]])
        with pytest.raises(InconsistentDiagram):
            check_consistency(d)

    def test_down_strand_needs_color(self):
        d = Diagram((), [[Id("s1", False)]])
        with pytest.raises(InconsistentDiagram):
            check_consistency(d)

    def test_circle_labels(self):
        labels = check_consistency(circle_ccw("s1"))
        assert labels.levels[1] == (
            frozenset(),
            frozenset({"s1"}),
            frozenset(),
        )

    def test_crossing_square_labels(self):
        d = Diagram((), [[Cross("s1", "s2", "up")]])
        labels = check_consistency(d)
        seen = set(labels.bottom) | set(labels.top)
        assert seen == {
            frozenset(),
            frozenset({"s1"}),
            frozenset({"s2"}),
            frozenset({"s1", "s2"}),
        }

    def test_cw_circle_needs_ambient_color(self):
        with pytest.raises(InconsistentDiagram):
            check_consistency(circle_cw("s1", region=()))
        check_consistency(circle_cw("s1", region=("s1",)))

    def test_box_region_recorded(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Box(poly("x1*x2")), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        labels = check_consistency(d)
        boxes = labels.boxes()
        assert len(boxes) == 1
        assert boxes[0][2] == frozenset({"s1"})

    def test_box_membership_with_cube(self, soergel3):
        good = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Box(poly("x1 + x2")), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        check_consistency(good, soergel3)
        bad = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Box(poly("x1")), Id("s1", False)],
                [Cap("s1", False)],
            ],
        )
        with pytest.raises(InconsistentDiagram):
            check_consistency(bad, soergel3)

    def test_unknown_color_with_cube(self, soergel3):
        d = Diagram((), [[Id("s9", True)]])
        with pytest.raises(InconsistentDiagram):
            check_consistency(d, soergel3)

    def test_wrong_variable_count_with_cube(self, univariate):
        d = Diagram(
            (),
            [
                [Cup("c", False)],
                [Id("c", True), Box(poly("x1", 3)), Id("c", False)],
                [Cap("c", False)],
            ],
        )
        with pytest.raises(InconsistentDiagram):
            check_consistency(d, univariate)

    def test_placements(self):
        d = Diagram((), [[Id("s1", True), Cup("s2", False)]])
        labels = check_consistency(d)
        row = labels.placements[0]
        assert row[0].bottom_pos == 0
        assert row[1].cell == Cup("s2", False)
        assert row[1].left_region == frozenset({"s1"})


class TestStrands:
    def test_circle_single_closed(self):
        comps = strand_components(circle_ccw("s1"))
        assert len(comps) == 1
        assert comps[0].closed
        assert comps[0].color == "s1"

    def test_identity_is_open(self):
        comps = strand_components(Diagram((), [[Id("s1", True)]]))
        assert len(comps) == 1
        assert not comps[0].closed

    def test_closed_component_filter(self):
        side_by_side = circle_ccw("s1").beside(Diagram((), [[Id("s2", True)]]))
        assert len(closed_components(side_by_side)) == 1
        assert len(strand_components(side_by_side)) == 2

    def test_crossing_counts(self):
        # a bigon: both strands run through both crossings
        d = Diagram(
            (),
            [
                [Cross("s1", "s2", "up")],
                [Cross("s2", "s1", "up")],
            ],
        )
        comps = strand_components(d)
        assert len(comps) == 2
        assert not any(c.closed for c in comps)
        assert sorted(c.crossings for c in comps) == [2, 2]
        assert sorted(c.color for c in comps) == ["s1", "s2"]


class TestParsing:
    def test_single_cell(self):
        d = parse_diagram("(id s1 up)", 3)
        assert d == Diagram((), [[Id("s1", True)]])

    def test_region_header(self):
        d = parse_diagram("(region s1 s2)\n(id s1 down)", 3)
        assert d.region == frozenset({"s1", "s2"})

    def test_seq_and_row(self):
        text = """
        (region)
        (seq
          (row (cup s1 ccw))
          (row (id s1 up) (id s1 down))
          (row (cap s1 ccw)))
        """
        d = parse_diagram(text, 3)
        assert len(d.slices) == 3
        assert d.is_closed()

    def test_bare_cells_stack(self):
        d = parse_diagram("(cup s1 ccw)\n(cap s1 ccw)", 3)
        assert d == circle_ccw("s1")

    def test_box(self):
        d = parse_diagram('(box "x1 + x2")', 3)
        assert d.slices == ((Box(poly("x1 + x2")),),)

    def test_comments(self):
        d = parse_diagram("; a circle\n(cup s1 ccw) ; bottom\n(cap s1 ccw)", 3)
        assert d == circle_ccw("s1")

    def test_round_trip(self):
        d = Diagram(
            ("s2",),
            [
                [Id("s2", True), Cup("s1", False)],
                [Id("s2", True), Id("s1", True), Box(poly("x3")), Id("s1", False)],
                [Id("s2", True), Cap("s1", False)],
            ],
        )
        again = parse_diagram(d.to_text(), 3)
        assert again == d

    def test_round_trip_empty_region(self):
        d = circle_ccw("s1")
        assert parse_diagram(d.to_text(), 3) == d

    def test_same_color_cross_rejected(self):
        with pytest.raises(DiagramParseError) as exc:
            parse_diagram("(cross s1 s1 up)", 3)
        assert exc.value.line == 1

    def test_unknown_cell(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("(wat s1 up)", 3)

    def test_bad_direction(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("(id s1 sideways)", 3)

    def test_bad_orientation(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("(cup s1 up)", 3)

    def test_unterminated_string(self):
        with pytest.raises(DiagramParseError):
            parse_diagram('(box "x1)', 3)

    def test_missing_paren(self):
        with pytest.raises(DiagramParseError) as exc:
            parse_diagram("(seq (id s1 up)", 3)
        assert exc.value.line == 1

    def test_bad_polynomial(self):
        with pytest.raises(DiagramParseError):
            parse_diagram('(box "x1 @@ 2")', 3)

    def test_unknown_color_with_whitelist(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("(id s9 up)", 3, colors=("s1", "s2"))
        parse_diagram("(id s1 up)", 3, colors=("s1", "s2"))

    def test_position_reported(self):
        with pytest.raises(DiagramParseError) as exc:
            parse_diagram("(seq\n  (row (id s1 up))\n  (row (id s1 oops)))", 3)
        assert exc.value.line == 3

    def test_empty_input(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("   \n  ", 3)

    def test_interface_error_becomes_parse_error(self):
        with pytest.raises(DiagramParseError):
            parse_diagram("(id s1 up)\n(id s2 up)", 3)


class TestSvg:
    def test_well_formed(self):
        d = Diagram(
            (),
            [
                [Cup("s1", False)],
                [Id("s1", True), Box(poly("x1*x2")), Id("s1", False)],
                [Id("s1", True), Cup("s2", False), Id("s1", False)],
                [
                    Id("s1", True),
                    Id("s2", True),
                    Cross("s2", "s1", "down"),
                ],
            ],
        )
        check_consistency(d)
        svg = render_svg(d)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert "path" in svg and "rect" in svg

    def test_labels_included(self):
        d = circle_ccw("s1")
        svg = render_svg(d, check_consistency(d))
        assert "{s1}" in svg

    def test_distinct_colors(self):
        d = Diagram((), [[Cross("s1", "s2", "up")]])
        svg = render_svg(d)
        assert svg.count("#c0392b") >= 1 and svg.count("#2980b9") >= 1
