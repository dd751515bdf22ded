"""Colored oriented planar diagrams with boxes, as slice sequences.

A diagram is read bottom to top.  Each slice is a horizontal row of
cells; a cell is an identity strand, a cup, a cap, a crossing of two
distinct colors, or a polynomial box.  Wires carry a color and a
direction (up or down), and regions between wires carry subsets of the
color set, starting from the leftmost label and toggling the strand's
color at every crossing of a strand.

The fixed orientation convention: an upward strand of color c separates
a region without c (left) from the region with c (right).

Diagrams are normalized to generic position: at most one non-identity
cell per slice.  Rows containing several events are split automatically,
left to right, during construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .polyring import Polynomial, PolynomialParseError, format_polynomial, parse_polynomial

Wire = tuple[str, bool]  # (color, points upward)


class DiagramParseError(ValueError):
    """A syntax or well-formedness error in diagram text, with position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class InconsistentDiagram(ValueError):
    """The diagram admits no consistent region labeling."""


# -- cells -----------------------------------------------------------------


@dataclass(frozen=True)
class Id:
    color: str
    up: bool

    def bottom(self) -> tuple[Wire, ...]:
        return ((self.color, self.up),)

    def top(self) -> tuple[Wire, ...]:
        return ((self.color, self.up),)

    def mirror(self) -> "Id":
        return Id(self.color, not self.up)

    def sexp(self) -> str:
        return f"(id {self.color} {'up' if self.up else 'down'})"


@dataclass(frozen=True)
class Cup:
    """A strand minimum; tag cw or ccw gives the circulation.

    The counterclockwise cup opens with an up wire on the left and
    represents comultiplication; the clockwise cup opens with a down wire
    on the left and represents inclusion.
    """

    color: str
    clockwise: bool

    def bottom(self) -> tuple[Wire, ...]:
        return ()

    def top(self) -> tuple[Wire, ...]:
        if self.clockwise:
            return ((self.color, False), (self.color, True))
        return ((self.color, True), (self.color, False))

    def mirror(self) -> "Cap":
        return Cap(self.color, self.clockwise)

    def sexp(self) -> str:
        return f"(cup {self.color} {'cw' if self.clockwise else 'ccw'})"


@dataclass(frozen=True)
class Cap:
    """A strand maximum; the clockwise cap represents the trace and the
    counterclockwise cap represents multiplication."""

    color: str
    clockwise: bool

    def bottom(self) -> tuple[Wire, ...]:
        if self.clockwise:
            return ((self.color, False), (self.color, True))
        return ((self.color, True), (self.color, False))

    def top(self) -> tuple[Wire, ...]:
        return ()

    def mirror(self) -> "Cup":
        return Cup(self.color, self.clockwise)

    def sexp(self) -> str:
        return f"(cap {self.color} {'cw' if self.clockwise else 'ccw'})"


_CROSS_KINDS = ("up", "down", "left", "right")


@dataclass(frozen=True)
class Cross:
    """Two strands of distinct colors crossing.

    left_color is the color entering at bottom left.  The kind gives the
    orientation pattern: both up, both down, or the two mixed patterns
    (left: bottom-left wire points down; right: bottom-left wire points
    up).
    """

    left_color: str
    right_color: str
    kind: str

    def __post_init__(self):
        if self.left_color == self.right_color:
            raise ValueError("strands of one color cannot cross")
        if self.kind not in _CROSS_KINDS:
            raise ValueError(f"unknown crossing kind {self.kind!r}")

    def bottom(self) -> tuple[Wire, ...]:
        g, d = self.left_color, self.right_color
        return {
            "up": ((g, True), (d, True)),
            "down": ((g, False), (d, False)),
            "left": ((g, False), (d, True)),
            "right": ((g, True), (d, False)),
        }[self.kind]

    def top(self) -> tuple[Wire, ...]:
        (gw, dw) = self.bottom()
        return (dw, gw)

    def mirror(self) -> "Cross":
        flipped = {"up": "down", "down": "up", "left": "right", "right": "left"}
        return Cross(self.left_color, self.right_color, flipped[self.kind])

    def sexp(self) -> str:
        return f"(cross {self.left_color} {self.right_color} {self.kind})"


@dataclass(frozen=True)
class Box:
    """A polynomial decoration living in one region."""

    poly: Polynomial

    def bottom(self) -> tuple[Wire, ...]:
        return ()

    def top(self) -> tuple[Wire, ...]:
        return ()

    def mirror(self) -> "Box":
        return self

    def sexp(self) -> str:
        return f'(box "{format_polynomial(self.poly)}")'


Cell = object  # any of the five cell classes


def _is_event(cell) -> bool:
    return not isinstance(cell, Id)


# -- the diagram -----------------------------------------------------------


class Diagram:
    """A slice-sequence diagram with a leftmost region label.

    Construction validates that adjacent slices share their wire
    interface and splits any row with several events into generic
    position.
    """

    def __init__(self, region: Iterable[str], slices: Iterable[Sequence[Cell]]):
        self.region: frozenset[str] = frozenset(region)
        split: list[tuple[Cell, ...]] = []
        for row in slices:
            split.extend(_split_row(tuple(row)))
        self.slices: tuple[tuple[Cell, ...], ...] = tuple(split)
        previous: Optional[tuple[Wire, ...]] = None
        for k, row in enumerate(self.slices):
            bottom = _row_bottom(row)
            if previous is not None and bottom != previous:
                raise InconsistentDiagram(
                    f"slice {k} expects wires {bottom} but gets {previous}"
                )
            previous = _row_top(row)

    # boundaries ----------------------------------------------------------

    @property
    def bottom_boundary(self) -> tuple[Wire, ...]:
        if not self.slices:
            return ()
        return _row_bottom(self.slices[0])

    @property
    def top_boundary(self) -> tuple[Wire, ...]:
        if not self.slices:
            return ()
        return _row_top(self.slices[-1])

    def is_closed(self) -> bool:
        return not self.bottom_boundary and not self.top_boundary

    def colors(self) -> list[str]:
        seen: list[str] = []
        for c in sorted(self.region):
            seen.append(c)
        for row in self.slices:
            for cell in row:
                for name in _cell_colors(cell):
                    if name not in seen:
                        seen.append(name)
        return seen

    # event representation -------------------------------------------------

    def events(self) -> list[tuple[Cell, int]]:
        """The non-identity cells with their bottom wire offsets, in firing
        order.  Pure identity slices contribute nothing."""
        out = []
        for row in self.slices:
            offset = 0
            for cell in row:
                if _is_event(cell):
                    out.append((cell, offset))
                offset += len(cell.bottom())
        return out

    @classmethod
    def from_events(
        cls,
        region: Iterable[str],
        bottom: Sequence[Wire],
        events: Sequence[tuple[Cell, int]],
    ) -> "Diagram":
        wires = list(bottom)
        rows = []
        for cell, pos in events:
            need = cell.bottom()
            if (
                pos < 0
                or pos > len(wires)
                or tuple(wires[pos : pos + len(need)]) != need
            ):
                raise InconsistentDiagram(
                    f"event {cell.sexp()} at offset {pos} does not match wires"
                )
            row = (
                [Id(c, u) for c, u in wires[:pos]]
                + [cell]
                + [Id(c, u) for c, u in wires[pos + len(need) :]]
            )
            rows.append(row)
            wires[pos : pos + len(need)] = list(cell.top())
        if not rows and bottom:
            rows.append([Id(c, u) for c, u in bottom])
        return cls(region, rows)

    def interchange_normal_form(self) -> "Diagram":
        """Sink every gap event as low as its pocket allows.

        A box slides below an earlier event when its gap is weakly left
        of that event's wires, so a box ends up directly above whatever
        closes its pocket from below.  Events that touch wires never
        trade places with each other: reordering them is left to
        explicit interchange moves, since any preference here would
        chase disjoint components around each other.  Offsets are
        untouched because a sinking gap event displaces nothing.
        """
        events = self.events()
        for idx in range(1, len(events)):
            cell, pos = events[idx]
            if cell.bottom() or cell.top():
                continue
            j = idx
            while j > 0:
                other, opos = events[j - 1]
                if pos > opos:
                    break
                if pos == opos and not (other.bottom() or other.top()):
                    break
                events[j - 1], events[j] = events[j], events[j - 1]
                j -= 1
        return Diagram.from_events(self.region, self.bottom_boundary, events)

    def elide_identities(self) -> "Diagram":
        """Drop pure pass-through slices (keeping one for bare wires)."""
        rows = [row for row in self.slices if any(_is_event(c) for c in row)]
        if not rows and self.bottom_boundary:
            rows = [list(self.slices[0])]
        return Diagram(self.region, rows)

    # composition ----------------------------------------------------------

    def stack(self, upper: "Diagram") -> "Diagram":
        """Vertical composition; self at the bottom, upper above it."""
        if self.region != upper.region:
            raise InconsistentDiagram(
                f"leftmost regions differ: {set(self.region)} vs {set(upper.region)}"
            )
        if self.slices and upper.slices and self.top_boundary != upper.bottom_boundary:
            raise InconsistentDiagram(
                f"boundary mismatch: {self.top_boundary} vs {upper.bottom_boundary}"
            )
        return Diagram(self.region, list(self.slices) + list(upper.slices))

    def beside(self, right: "Diagram") -> "Diagram":
        """Horizontal composition; right's leftmost region must equal the
        label right of self's strands."""
        expected = _rightmost_region(self.region, self.bottom_boundary)
        if right.region != expected:
            raise InconsistentDiagram(
                f"right diagram starts at {set(right.region)},"
                f" expected {set(expected)}"
            )
        left_rows = list(self.slices)
        right_rows = list(right.slices)
        if not left_rows and not right_rows:
            return Diagram(self.region, [])
        height = max(len(left_rows), len(right_rows))
        left_rows += [
            [Id(c, u) for c, u in self.top_boundary]
            for _ in range(height - len(left_rows))
        ]
        right_rows += [
            [Id(c, u) for c, u in right.top_boundary]
            for _ in range(height - len(right_rows))
        ]
        rows = [list(a) + list(b) for a, b in zip(left_rows, right_rows)]
        return Diagram(self.region, rows)

    def rotate180(self) -> "Diagram":
        """Rotate the whole picture half a turn.

        The slice order and each row reverse, every cell is mirrored, and
        the leftmost region becomes the old rightmost one.
        """
        new_region = _rightmost_region(self.region, self.bottom_boundary)
        rows = [
            [cell.mirror() for cell in reversed(row)]
            for row in reversed(self.slices)
        ]
        return Diagram(new_region, rows)

    # equality and text ----------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Diagram):
            return NotImplemented
        return self.region == other.region and self.slices == other.slices

    def __hash__(self) -> int:
        return hash((self.region, self.slices))

    def to_text(self) -> str:
        lines = [f"(region {' '.join(sorted(self.region))})".replace(" )", ")")]
        if not self.slices:
            lines.append("(seq)")
        else:
            lines.append("(seq")
            for row in self.slices:
                lines.append("  (row " + " ".join(cell.sexp() for cell in row) + ")")
            lines[-1] += ")"
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"Diagram({len(self.slices)} slices, I0={set(self.region) or '{}'})"


def _row_bottom(row: Sequence[Cell]) -> tuple[Wire, ...]:
    out: tuple[Wire, ...] = ()
    for cell in row:
        out += cell.bottom()
    return out


def _row_top(row: Sequence[Cell]) -> tuple[Wire, ...]:
    out: tuple[Wire, ...] = ()
    for cell in row:
        out += cell.top()
    return out


def _cell_colors(cell) -> tuple[str, ...]:
    if isinstance(cell, (Id, Cup, Cap)):
        return (cell.color,)
    if isinstance(cell, Cross):
        return (cell.left_color, cell.right_color)
    return ()


def _split_row(row: tuple[Cell, ...]) -> list[tuple[Cell, ...]]:
    """Split a row with several events into one-event slices.

    Events fire left to right: cells left of the current event show
    their top wires, cells right of it still show their bottom wires.
    """
    events = [i for i, cell in enumerate(row) if _is_event(cell)]
    if len(events) <= 1:
        return [row]
    out = []
    for which, idx in enumerate(events):
        cells: list[Cell] = []
        for j, cell in enumerate(row):
            if j == idx:
                cells.append(cell)
            elif _is_event(cell):
                wires = cell.top() if j < idx else cell.bottom()
                cells.extend(Id(c, u) for c, u in wires)
            else:
                cells.append(cell)
        out.append(tuple(cells))
    return out


def _rightmost_region(region: frozenset[str], wires: Sequence[Wire]) -> frozenset[str]:
    label = set(region)
    for color, up in wires:
        if up:
            if color in label:
                raise InconsistentDiagram(
                    f"upward {color} strand inside a {color} region"
                )
            label.add(color)
        else:
            if color not in label:
                raise InconsistentDiagram(
                    f"downward {color} strand outside the {color} region"
                )
            label.remove(color)
    return frozenset(label)


# -- consistency -----------------------------------------------------------


@dataclass(frozen=True)
class CellPlacement:
    """Where a cell sits inside its slice: wire offsets and the region
    label immediately to its left."""

    cell: Cell
    bottom_pos: int
    top_pos: int
    left_region: frozenset[str]


class RegionLabeling:
    """Region labels of every horizontal level plus per-cell placements."""

    def __init__(
        self,
        levels: Sequence[Sequence[frozenset[str]]],
        placements: Sequence[Sequence[CellPlacement]],
    ):
        self.levels = tuple(tuple(level) for level in levels)
        self.placements = tuple(tuple(p) for p in placements)

    @property
    def bottom(self) -> tuple[frozenset[str], ...]:
        return self.levels[0]

    @property
    def top(self) -> tuple[frozenset[str], ...]:
        return self.levels[-1]

    def boxes(self) -> list[tuple[int, Box, frozenset[str]]]:
        out = []
        for k, row in enumerate(self.placements):
            for p in row:
                if isinstance(p.cell, Box):
                    out.append((k, p.cell, p.left_region))
        return out


def _propagate(region: frozenset[str], wires: Sequence[Wire], where: str) -> list[frozenset[str]]:
    labels = [region]
    current = set(region)
    for color, up in wires:
        if up:
            if color in current:
                raise InconsistentDiagram(
                    f"{where}: upward {color} strand inside a {color} region"
                )
            current.add(color)
        else:
            if color not in current:
                raise InconsistentDiagram(
                    f"{where}: downward {color} strand outside the {color} region"
                )
            current.remove(color)
        labels.append(frozenset(current))
    return labels


def check_consistency(d: Diagram, cube=None) -> RegionLabeling:
    """Region labels for every level, or InconsistentDiagram.

    Labels propagate rightward from the leftmost region at each level.
    With a hypercube given, box polynomials are additionally required to
    lie in the ring of their region.
    """
    levels = [_propagate(d.region, d.bottom_boundary, "bottom boundary")]
    placements: list[list[CellPlacement]] = []
    for k, row in enumerate(d.slices):
        below = levels[-1]
        above = _propagate(d.region, _row_top(row), f"slice {k}")
        placed = []
        b_pos = 0
        t_pos = 0
        for cell in row:
            left = below[b_pos]
            if above[t_pos] != left:
                raise InconsistentDiagram(
                    f"slice {k}: region mismatch at {cell.sexp()}"
                )
            if isinstance(cell, Box) and cube is not None:
                if cell.poly.nvars != cube.nvars:
                    raise InconsistentDiagram(
                        f"slice {k}: box polynomial uses {cell.poly.nvars} variables,"
                        f" instance has {cube.nvars}"
                    )
                if not cube.contains(cell.poly, left):
                    raise InconsistentDiagram(
                        f"slice {k}: box {cell.poly} is not in"
                        f" {cube.format_subset(left)}"
                    )
            placed.append(CellPlacement(cell, b_pos, t_pos, left))
            b_pos += len(cell.bottom())
            t_pos += len(cell.top())
        placements.append(placed)
        levels.append(above)
    if cube is not None:
        for color in d.colors():
            if color not in cube.colors:
                raise InconsistentDiagram(f"unknown color {color!r}")
    return RegionLabeling(levels, placements)


# -- strand components -----------------------------------------------------


@dataclass
class StrandComponent:
    """A connected strand: its color, whether it is closed, how many
    crossings it passes, and the wire segments it occupies as pairs
    (slice index, bottom wire offset)."""

    color: str
    closed: bool
    crossings: int
    segments: list[tuple[int, int]]


def strand_components(d: Diagram) -> list[StrandComponent]:
    """Trace wires through cells into connected strand components."""
    # endpoints are (level, index); unite them through every cell
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    crossings: dict[tuple[int, int], int] = {}
    color_of: dict[tuple[int, int], str] = {}
    for k, row in enumerate(d.slices):
        b_pos = 0
        t_pos = 0
        for cell in row:
            nb = len(cell.bottom())
            for i, (c, _) in enumerate(cell.bottom()):
                color_of[(k, b_pos + i)] = c
            for i, (c, _) in enumerate(cell.top()):
                color_of[(k + 1, t_pos + i)] = c
            if isinstance(cell, Id):
                union((k, b_pos), (k + 1, t_pos))
            elif isinstance(cell, Cup):
                union((k + 1, t_pos), (k + 1, t_pos + 1))
            elif isinstance(cell, Cap):
                union((k, b_pos), (k, b_pos + 1))
            elif isinstance(cell, Cross):
                union((k, b_pos), (k + 1, t_pos + 1))
                union((k, b_pos + 1), (k + 1, t_pos))
            b_pos += nb
            t_pos += len(cell.top())
    for k, row in enumerate(d.slices):
        b_pos = 0
        for cell in row:
            if isinstance(cell, Cross):
                for i in range(2):
                    root = find((k, b_pos + i))
                    crossings[root] = crossings.get(root, 0) + 1
            b_pos += len(cell.bottom())
    boundary_roots = set()
    for i in range(len(d.bottom_boundary)):
        boundary_roots.add(find((0, i)))
    for i in range(len(d.top_boundary)):
        boundary_roots.add(find((len(d.slices), i)))
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for point in list(parent):
        groups.setdefault(find(point), []).append(point)
    out = []
    for root, points in sorted(groups.items()):
        segments = sorted(points)
        out.append(
            StrandComponent(
                color=color_of[root],
                closed=root not in boundary_roots,
                crossings=crossings.get(root, 0),
                segments=segments,
            )
        )
    return out


def closed_components(d: Diagram) -> list[StrandComponent]:
    return [c for c in strand_components(d) if c.closed]


# -- parsing ---------------------------------------------------------------


class _Node:
    __slots__ = ("value", "children", "line", "col")

    def __init__(self, value, children, line, col):
        self.value = value
        self.children = children
        self.line = line
        self.col = col


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    out = []
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            out.append((c, line, col))
            col += 1
            i += 1
        elif c == '"':
            start_line, start_col = line, col
            j = i + 1
            while j < len(text) and text[j] not in '"\n':
                j += 1
            if j >= len(text) or text[j] == "\n":
                raise DiagramParseError("unterminated string", start_line, start_col)
            out.append(("str:" + text[i + 1 : j], start_line, start_col))
            col += j - i + 1
            i = j + 1
        else:
            j = i
            while j < len(text) and text[j] not in ' \t\r\n();"':
                j += 1
            out.append(("atom:" + text[i:j], line, col))
            col += j - i
            i = j
    return out


def _read(tokens, pos):
    if pos >= len(tokens):
        last = tokens[-1] if tokens else ("", 1, 1)
        raise DiagramParseError("unexpected end of input", last[1], last[2])
    tok, line, col = tokens[pos]
    if tok == "(":
        children = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise DiagramParseError("missing ')'", line, col)
            if tokens[pos][0] == ")":
                return _Node(None, children, line, col), pos + 1
            node, pos = _read(tokens, pos)
            children.append(node)
    if tok == ")":
        raise DiagramParseError("unexpected ')'", line, col)
    kind, _, payload = tok.partition(":")
    return _Node((kind, payload), None, line, col), pos + 1


def _expect_atom(node: _Node, what: str) -> str:
    if node.children is not None or node.value[0] != "atom":
        raise DiagramParseError(f"expected {what}", node.line, node.col)
    return node.value[1]


def _parse_cell(node: _Node, nvars: int, colors) -> Cell:
    if node.children is None:
        raise DiagramParseError("expected a cell", node.line, node.col)
    if not node.children:
        raise DiagramParseError("empty cell", node.line, node.col)
    head = _expect_atom(node.children[0], "cell name")
    args = node.children[1:]

    def check_color(name, where):
        if colors is not None and name not in colors:
            raise DiagramParseError(
                f"unknown color {name!r}", where.line, where.col
            )
        return name

    if head == "id":
        if len(args) != 2:
            raise DiagramParseError("id takes color and direction", node.line, node.col)
        color = check_color(_expect_atom(args[0], "color"), args[0])
        direction = _expect_atom(args[1], "direction")
        if direction not in ("up", "down"):
            raise DiagramParseError(
                f"bad direction {direction!r}", args[1].line, args[1].col
            )
        return Id(color, direction == "up")
    if head in ("cup", "cap"):
        if len(args) != 2:
            raise DiagramParseError(
                f"{head} takes color and orientation", node.line, node.col
            )
        color = check_color(_expect_atom(args[0], "color"), args[0])
        orient = _expect_atom(args[1], "orientation")
        if orient not in ("cw", "ccw"):
            raise DiagramParseError(
                f"bad orientation {orient!r}", args[1].line, args[1].col
            )
        cls = Cup if head == "cup" else Cap
        return cls(color, orient == "cw")
    if head == "cross":
        if len(args) != 3:
            raise DiagramParseError(
                "cross takes two colors and a kind", node.line, node.col
            )
        c1 = check_color(_expect_atom(args[0], "color"), args[0])
        c2 = check_color(_expect_atom(args[1], "color"), args[1])
        kind = _expect_atom(args[2], "kind")
        if kind not in _CROSS_KINDS:
            raise DiagramParseError(f"bad crossing kind {kind!r}", args[2].line, args[2].col)
        if c1 == c2:
            raise DiagramParseError(
                "strands of one color cannot cross", node.line, node.col
            )
        return Cross(c1, c2, kind)
    if head == "box":
        if len(args) != 1 or args[0].children is not None or args[0].value[0] != "str":
            raise DiagramParseError(
                'box takes one quoted polynomial', node.line, node.col
            )
        try:
            poly = parse_polynomial(args[0].value[1], nvars)
        except PolynomialParseError as exc:
            raise DiagramParseError(str(exc), args[0].line, args[0].col) from None
        return Box(poly)
    raise DiagramParseError(f"unknown cell {head!r}", node.line, node.col)


def parse_diagram(text: str, nvars: int, colors: Optional[Iterable[str]] = None) -> Diagram:
    """Parse the diagram DSL.

    The text is a sequence of forms: an optional (region c1 c2 ...)
    header, then slices bottom to top.  A slice is a cell, a (row ...) of
    cells, or a (seq ...) of further slices (flattened in order).
    Semicolons start comments.
    """
    color_set = set(colors) if colors is not None else None
    tokens = _tokenize(text)
    nodes = []
    pos = 0
    while pos < len(tokens):
        node, pos = _read(tokens, pos)
        nodes.append(node)
    if not nodes:
        raise DiagramParseError("empty input", 1, 1)
    region: list[str] = []
    start = 0
    first = nodes[0]
    if (
        first.children
        and first.children[0].children is None
        and first.children[0].value == ("atom", "region")
    ):
        for child in first.children[1:]:
            name = _expect_atom(child, "color")
            if color_set is not None and name not in color_set:
                raise DiagramParseError(
                    f"unknown color {name!r}", child.line, child.col
                )
            region.append(name)
        start = 1
    rows: list[list[Cell]] = []

    def walk(node: _Node):
        if node.children is None:
            raise DiagramParseError("expected a slice or cell", node.line, node.col)
        if node.children and node.children[0].children is None:
            head = node.children[0].value
            if head == ("atom", "seq"):
                for child in node.children[1:]:
                    walk(child)
                return
            if head == ("atom", "row"):
                rows.append(
                    [_parse_cell(c, nvars, color_set) for c in node.children[1:]]
                )
                return
        rows.append([_parse_cell(node, nvars, color_set)])

    for node in nodes[start:]:
        walk(node)
    try:
        return Diagram(region, rows)
    except InconsistentDiagram as exc:
        raise DiagramParseError(str(exc), first.line, first.col) from None


def format_diagram(d: Diagram) -> str:
    """Diagram text in the DSL; parses back to an equal diagram."""
    lines = ["(region" + "".join(f" {c}" for c in sorted(d.region)) + ")"]
    for row in d.slices:
        lines.append("(row " + " ".join(cell.sexp() for cell in row) + ")")
    return "\n".join(lines)


# -- SVG rendering ---------------------------------------------------------

_PALETTE = (
    "#c0392b",
    "#2980b9",
    "#27ae60",
    "#8e44ad",
    "#d35400",
    "#16a085",
    "#7f8c8d",
)


def render_svg(d: Diagram, labeling: Optional[RegionLabeling] = None) -> str:
    """A simple SVG picture of the diagram, bottom slice at the bottom.

    Cups and caps are drawn as half turns, crossings as smooth swaps,
    boxes as framed polynomials.  An arrowhead in the middle of every
    identity segment shows the orientation.
    """
    step_x = 50
    step_y = 60
    margin = 40
    colors = d.colors()
    color_css = {c: _PALETTE[i % len(_PALETTE)] for i, c in enumerate(colors)}
    widths = [len(d.bottom_boundary)]
    for row in d.slices:
        widths.append(len(_row_top(row)))
    max_width = max(widths) if widths else 0
    height = max(len(d.slices), 1) * step_y + 2 * margin
    width = max(max_width, 1) * step_x + 2 * margin

    def x_at(i: int) -> float:
        return margin + step_x / 2 + i * step_x

    def y_at(level: int) -> float:
        return height - margin - level * step_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}"'
        f' height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    def arrow(x, y, upward, css):
        s = 5
        tip = y - s if upward else y + s
        base = y + s if upward else y - s
        parts.append(
            f'<path d="M {x - s} {base} L {x} {tip} L {x + s} {base} Z"'
            f' fill="{css}"/>'
        )

    for k, row in enumerate(d.slices):
        y0 = y_at(k)
        y1 = y_at(k + 1)
        ym = (y0 + y1) / 2
        b_pos = 0
        t_pos = 0
        for cell in row:
            if isinstance(cell, Id):
                css = color_css[cell.color]
                xb, xt = x_at(b_pos), x_at(t_pos)
                parts.append(
                    f'<path d="M {xb} {y0} C {xb} {ym} {xt} {ym} {xt} {y1}"'
                    f' stroke="{css}" fill="none" stroke-width="2"/>'
                )
                arrow((xb + xt) / 2, ym, cell.up, css)
            elif isinstance(cell, Cup):
                css = color_css[cell.color]
                xl, xr = x_at(t_pos), x_at(t_pos + 1)
                parts.append(
                    f'<path d="M {xl} {y1} C {xl} {y0} {xr} {y0} {xr} {y1}"'
                    f' stroke="{css}" fill="none" stroke-width="2"/>'
                )
                left_up = cell.top()[0][1]
                arrow((xl + xr) / 2, (y0 + ym) / 2, not left_up, css)
            elif isinstance(cell, Cap):
                css = color_css[cell.color]
                xl, xr = x_at(b_pos), x_at(b_pos + 1)
                parts.append(
                    f'<path d="M {xl} {y0} C {xl} {y1} {xr} {y1} {xr} {y0}"'
                    f' stroke="{css}" fill="none" stroke-width="2"/>'
                )
                left_up = cell.bottom()[0][1]
                arrow((xl + xr) / 2, (y1 + ym) / 2, left_up, css)
            elif isinstance(cell, Cross):
                (c1, u1), (c2, u2) = cell.bottom()
                xa, xb2 = x_at(b_pos), x_at(b_pos + 1)
                xc, xd = x_at(t_pos), x_at(t_pos + 1)
                parts.append(
                    f'<path d="M {xa} {y0} C {xa} {ym} {xd} {ym} {xd} {y1}"'
                    f' stroke="{color_css[c1]}" fill="none" stroke-width="2"/>'
                )
                parts.append(
                    f'<path d="M {xb2} {y0} C {xb2} {ym} {xc} {ym} {xc} {y1}"'
                    f' stroke="{color_css[c2]}" fill="none" stroke-width="2"/>'
                )
            elif isinstance(cell, Box):
                x = x_at(b_pos) - step_x / 2
                text = format_polynomial(cell.poly)
                w = max(30, 8 * len(text))
                parts.append(
                    f'<rect x="{x - w / 2}" y="{ym - 12}" width="{w}" height="24"'
                    ' fill="#f8f8f8" stroke="black"/>'
                )
                parts.append(
                    f'<text x="{x}" y="{ym + 4}" font-size="12"'
                    f' text-anchor="middle" font-family="monospace">{text}</text>'
                )
            b_pos += len(cell.bottom())
            t_pos += len(cell.top())
    if labeling is not None:
        for k, level in enumerate(labeling.levels):
            y = y_at(k) - 6
            for i, label in enumerate(level):
                x = x_at(i) - step_x / 2
                text = "{" + ",".join(sorted(label)) + "}"
                parts.append(
                    f'<text x="{x}" y="{y}" font-size="9" fill="#999"'
                    f' text-anchor="middle">{text}</text>'
                )
    parts.append("</svg>")
    return "\n".join(parts)
