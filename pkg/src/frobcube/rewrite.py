"""Rewriting of diagrams with the shipped relation library.

Relations live as pairs of s-expression files under ``relations/``; each
side is a small diagram over abstract colors whose boxes may hold
symbolic payloads (metavariables, edge factors, dual basis legs, traces,
products and exact quotients).  Instantiating a side against a hypercube
picks an injective color map and a root region and expands any dual
basis sums, so one file covers every placement of the relation inside a
larger cube.

On top of the rule library this module provides window matching and
rule application on concrete diagrams, the relation checker that
replays every rotation, color and root variant of every rule on a given
hypercube, and two reduction strategies: a one-color evaluator that
collapses closed diagrams to a single box and a two-color simplifier
that removes closed components from mixed diagrams.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Sequence

from .diagram import (
    Box,
    Cap,
    Cross,
    Cup,
    Diagram,
    DiagramParseError,
    Id,
    InconsistentDiagram,
    closed_components,
    _expect_atom,
    _is_event,
    _read,
    _row_bottom,
    _row_top,
    _split_row,
    _tokenize,
)
from .evaluator import Morphism, domain_indices, evaluate, morphism_equal
from .frobenius import CheckReport, FrobeniusHypercube
from .polyring import ONE, Polynomial, exact_divide, format_polynomial, scalar

Subset = frozenset


class RewriteError(Exception):
    pass


class NoMatch(RewriteError):
    """The rule does not apply at the requested position."""


class RelationFileError(RewriteError):
    """A relation file is malformed or its two sides disagree."""


# -- symbolic box payloads -------------------------------------------------


@dataclass(frozen=True)
class PayloadConst:
    value: int


@dataclass(frozen=True)
class PayloadVar:
    name: str


@dataclass(frozen=True)
class PayloadMu:
    colors: tuple[str, ...]


@dataclass(frozen=True)
class PayloadLeg:
    which: str
    lower: tuple[str, ...]
    gamma: str
    tag: str


@dataclass(frozen=True)
class PayloadTrace:
    gamma: str
    inner: object


@dataclass(frozen=True)
class PayloadProduct:
    factors: tuple


@dataclass(frozen=True)
class PayloadRatio:
    num: object
    den: object


def _payload_children(p) -> tuple:
    if isinstance(p, PayloadTrace):
        return (p.inner,)
    if isinstance(p, PayloadProduct):
        return p.factors
    if isinstance(p, PayloadRatio):
        return (p.num, p.den)
    return ()


def _payload_vars(p) -> set[str]:
    out = set()
    if isinstance(p, PayloadVar):
        out.add(p.name)
    for child in _payload_children(p):
        out |= _payload_vars(child)
    return out


def _payload_tags(p) -> dict[str, tuple[tuple[str, ...], str]]:
    out: dict[str, tuple[tuple[str, ...], str]] = {}
    if isinstance(p, PayloadLeg):
        out[p.tag] = (p.lower, p.gamma)
    for child in _payload_children(p):
        for tag, spec in _payload_tags(child).items():
            if tag in out and out[tag] != spec:
                raise RelationFileError(f"tag {tag!r} used with two different edges")
            out[tag] = spec
    return out


def _format_payload(p) -> str:
    if isinstance(p, PayloadConst):
        return str(p.value)
    if isinstance(p, PayloadVar):
        return "?" + p.name
    if isinstance(p, PayloadMu):
        return "(mu " + " ".join(p.colors) + ")"
    if isinstance(p, PayloadLeg):
        lower = " ".join(p.lower)
        return f"(leg {p.which} ({lower}) {p.gamma} {p.tag})"
    if isinstance(p, PayloadTrace):
        return f"(trace {p.gamma} {_format_payload(p.inner)})"
    if isinstance(p, PayloadProduct):
        return "(* " + " ".join(_format_payload(f) for f in p.factors) + ")"
    if isinstance(p, PayloadRatio):
        return f"(ratio {_format_payload(p.num)} {_format_payload(p.den)})"
    raise TypeError(f"not a payload: {p!r}")


def _eval_payload(
    cube: FrobeniusHypercube,
    p,
    colormap: dict[str, str],
    root: Subset,
    bindings: dict[str, Polynomial],
    tag_index: dict[str, int],
) -> Polynomial:
    if isinstance(p, PayloadConst):
        return Polynomial.constant(cube.nvars, p.value)
    if isinstance(p, PayloadVar):
        try:
            return bindings[p.name]
        except KeyError:
            raise NoMatch(f"metavariable ?{p.name} is unbound") from None
    if isinstance(p, PayloadMu):
        upper = root | {colormap[c] for c in p.colors}
        return cube.mu(root, upper)
    if isinstance(p, PayloadLeg):
        lower = root | {colormap[c] for c in p.lower}
        edge = cube.edge(lower, colormap[p.gamma])
        members = edge.basis if p.which == "basis" else edge.duals
        return members[tag_index[p.tag]]
    if isinstance(p, PayloadTrace):
        inner = _eval_payload(cube, p.inner, colormap, root, bindings, tag_index)
        return cube.trace(root, root | {colormap[p.gamma]}, inner)
    if isinstance(p, PayloadProduct):
        out = Polynomial.one(cube.nvars)
        for f in p.factors:
            out = out * _eval_payload(cube, f, colormap, root, bindings, tag_index)
        return out
    if isinstance(p, PayloadRatio):
        num = _eval_payload(cube, p.num, colormap, root, bindings, tag_index)
        den = _eval_payload(cube, p.den, colormap, root, bindings, tag_index)
        quotient = exact_divide(num, den)
        if quotient is None:
            raise NoMatch(f"quotient {_format_payload(p)} is not a polynomial here")
        return quotient
    raise TypeError(f"not a payload: {p!r}")


@dataclass(frozen=True)
class PatternBox:
    """A box cell whose contents are symbolic."""

    payload: object

    def bottom(self) -> tuple:
        return ()

    def top(self) -> tuple:
        return ()

    def mirror(self) -> "PatternBox":
        return self

    def sexp(self) -> str:
        return f"(box {_format_payload(self.payload)})"


# -- one side of a relation ------------------------------------------------


def _fold_region(region: Subset, wires: Sequence[tuple[str, bool]]) -> Subset:
    cur = set(region)
    for color, up in wires:
        if up:
            if color in cur:
                raise RelationFileError(f"upward {color} wire inside a {color} region")
            cur.add(color)
        else:
            if color not in cur:
                raise RelationFileError(f"downward {color} wire outside the {color} region")
            cur.discard(color)
    return frozenset(cur)


class SideSpec:
    """One side of a relation over abstract colors.

    Rows are stored as written; the derived event list (one event per
    slice, identity padding dropped) is what matching and instantiation
    work with.
    """

    def __init__(self, colors: Sequence[str], region: Iterable[str], rows):
        self.colors = tuple(colors)
        self.region = frozenset(region)
        self.rows = tuple(tuple(row) for row in rows)
        declared = set(self.colors)
        if not self.region <= declared:
            raise RelationFileError("region uses undeclared colors")
        slices: list[tuple] = []
        for row in self.rows:
            slices.extend(_split_row(row))
        previous = None
        for row in slices:
            bottom = _row_bottom(row)
            if previous is not None and bottom != previous:
                raise RelationFileError(
                    f"slice interfaces do not chain: {bottom} after {previous}"
                )
            previous = _row_top(row)
        self.bottom: tuple = _row_bottom(slices[0]) if slices else ()
        self.top: tuple = _row_top(slices[-1]) if slices else ()
        for color, _ in self.bottom + self.top:
            if color not in declared:
                raise RelationFileError(f"undeclared boundary color {color!r}")
        # walk the events, recording the region left of every box
        self.pattern: list[tuple[object, int]] = []
        self.box_regions: list[Subset] = []
        self.bare_var_regions: dict[str, Subset] = {}
        wires = list(self.bottom)
        _fold_region(self.region, wires)
        for row in slices:
            offset = 0
            for cell in row:
                if _is_event(cell):
                    self.pattern.append((cell, offset))
                    if isinstance(cell, PatternBox):
                        left = _fold_region(self.region, wires[:offset])
                        self.box_regions.append(left)
                        if isinstance(cell.payload, PayloadVar):
                            name = cell.payload.name
                            prev = self.bare_var_regions.get(name, frozenset())
                            self.bare_var_regions[name] = prev | left
                n = len(cell.bottom())
                wires[offset : offset + n] = list(cell.top())
                offset += len(cell.top())
        self.vars: set[str] = set()
        self.tags: dict[str, tuple[tuple[str, ...], str]] = {}
        for cell, _ in self.pattern:
            if isinstance(cell, PatternBox):
                self.vars |= _payload_vars(cell.payload)
                for tag, spec in _payload_tags(cell.payload).items():
                    if tag in self.tags and self.tags[tag] != spec:
                        raise RelationFileError(
                            f"tag {tag!r} used with two different edges"
                        )
                    self.tags[tag] = spec

    def rotate180(self) -> "SideSpec":
        region = _fold_region(self.region, self.bottom)
        rows = [
            tuple(cell.mirror() for cell in reversed(row))
            for row in reversed(self.rows)
        ]
        return SideSpec(self.colors, region, rows)

    def instantiate(
        self,
        cube: FrobeniusHypercube,
        colormap: dict[str, str],
        root: Subset,
        bindings: dict[str, Polynomial],
    ) -> list[tuple[object, Diagram]]:
        """All concrete diagrams of this side as (coefficient, diagram)
        pairs; dual basis tags expand to sums.  Box membership in the
        surrounding region is enforced and failure raises NoMatch."""
        region = root | {colormap[c] for c in self.region}
        tag_names = list(self.tags)
        ranges = []
        for tag in tag_names:
            lower_abs, gamma_abs = self.tags[tag]
            lower = root | {colormap[c] for c in lower_abs}
            ranges.append(range(cube.edge(lower, colormap[gamma_abs]).rank))
        terms = []
        for combo in itertools.product(*ranges):
            tag_index = dict(zip(tag_names, combo))
            box_regions = iter(self.box_regions)
            rows = []
            for row in self.rows:
                cells = []
                for cell in row:
                    cells.append(
                        self._concrete_cell(
                            cube, cell, colormap, root, bindings, tag_index, box_regions
                        )
                    )
                rows.append(cells)
            terms.append((ONE, Diagram(region, rows)))
        return terms

    def _concrete_cell(self, cube, cell, colormap, root, bindings, tag_index, box_regions):
        if isinstance(cell, Id):
            return Id(colormap[cell.color], cell.up)
        if isinstance(cell, Cup):
            return Cup(colormap[cell.color], cell.clockwise)
        if isinstance(cell, Cap):
            return Cap(colormap[cell.color], cell.clockwise)
        if isinstance(cell, Cross):
            return Cross(colormap[cell.left_color], colormap[cell.right_color], cell.kind)
        if isinstance(cell, PatternBox):
            poly = _eval_payload(cube, cell.payload, colormap, root, bindings, tag_index)
            pocket = root | {colormap[c] for c in next(box_regions)}
            if not cube.contains(poly, pocket):
                raise NoMatch(
                    f"box polynomial {format_polynomial(poly)} does not lie in"
                    f" {cube.format_subset(pocket)}"
                )
            return Box(poly)
        raise TypeError(f"not a pattern cell: {cell!r}")


# -- parsing relation files ------------------------------------------------


def _read_forms(text: str):
    tokens = _tokenize(text)
    nodes = []
    pos = 0
    while pos < len(tokens):
        node, pos = _read(tokens, pos)
        nodes.append(node)
    return nodes


def _check_declared(colors, declared, node):
    for c in colors:
        if c not in declared:
            raise RelationFileError(f"undeclared color {c!r} at line {node.line}")


def _parse_payload(node, declared):
    if node.children is None:
        kind, text = node.value
        if kind != "atom":
            raise RelationFileError(f"bad payload at line {node.line}")
        if text.startswith("?"):
            if len(text) < 2:
                raise RelationFileError("a metavariable needs a name")
            return PayloadVar(text[1:])
        try:
            return PayloadConst(int(text))
        except ValueError:
            raise RelationFileError(
                f"unknown payload atom {text!r} at line {node.line}"
            ) from None
    if not node.children:
        raise RelationFileError(f"empty payload at line {node.line}")
    head = _expect_atom(node.children[0], "payload head")
    args = node.children[1:]
    if head == "mu":
        colors = tuple(_expect_atom(a, "color") for a in args)
        _check_declared(colors, declared, node)
        return PayloadMu(colors)
    if head == "leg":
        if len(args) != 4 or args[1].children is None:
            raise RelationFileError(
                f"leg takes which, (lower...), color, tag at line {node.line}"
            )
        which = _expect_atom(args[0], "basis or dual")
        if which not in ("basis", "dual"):
            raise RelationFileError(f"bad leg selector {which!r}")
        lower = tuple(_expect_atom(a, "color") for a in args[1].children)
        gamma = _expect_atom(args[2], "color")
        tag = _expect_atom(args[3], "tag")
        _check_declared(lower + (gamma,), declared, node)
        return PayloadLeg(which, lower, gamma, tag)
    if head == "trace":
        if len(args) != 2:
            raise RelationFileError(f"trace takes color and payload at line {node.line}")
        gamma = _expect_atom(args[0], "color")
        _check_declared((gamma,), declared, node)
        return PayloadTrace(gamma, _parse_payload(args[1], declared))
    if head == "*":
        return PayloadProduct(tuple(_parse_payload(a, declared) for a in args))
    if head == "ratio":
        if len(args) != 2:
            raise RelationFileError(f"ratio takes two payloads at line {node.line}")
        return PayloadRatio(_parse_payload(args[0], declared), _parse_payload(args[1], declared))
    raise RelationFileError(f"unknown payload form {head!r} at line {node.line}")


def _parse_pattern_cell(node, declared):
    if node.children is None or not node.children:
        raise RelationFileError("expected a cell")
    head = _expect_atom(node.children[0], "cell name")
    args = node.children[1:]
    if head == "id":
        if len(args) != 2:
            raise RelationFileError(f"id takes color and direction at line {node.line}")
        color = _expect_atom(args[0], "color")
        direction = _expect_atom(args[1], "direction")
        if direction not in ("up", "down"):
            raise RelationFileError(f"bad direction {direction!r} at line {node.line}")
        _check_declared((color,), declared, node)
        return Id(color, direction == "up")
    if head in ("cup", "cap"):
        if len(args) != 2:
            raise RelationFileError(f"{head} takes color and orientation at line {node.line}")
        color = _expect_atom(args[0], "color")
        orient = _expect_atom(args[1], "orientation")
        if orient not in ("cw", "ccw"):
            raise RelationFileError(f"bad orientation {orient!r} at line {node.line}")
        _check_declared((color,), declared, node)
        cls = Cup if head == "cup" else Cap
        return cls(color, orient == "cw")
    if head == "cross":
        if len(args) != 3:
            raise RelationFileError(f"cross takes two colors and a kind at line {node.line}")
        c1 = _expect_atom(args[0], "color")
        c2 = _expect_atom(args[1], "color")
        kind = _expect_atom(args[2], "kind")
        _check_declared((c1, c2), declared, node)
        return Cross(c1, c2, kind)
    if head == "box":
        if len(args) != 1:
            raise RelationFileError(f"box takes one payload at line {node.line}")
        return PatternBox(_parse_payload(args[0], declared))
    raise RelationFileError(f"unknown cell {head!r} at line {node.line}")


def _parse_side(text: str, where: str) -> SideSpec:
    try:
        forms = _read_forms(text)
    except DiagramParseError as exc:
        raise RelationFileError(f"{where}: {exc}") from None
    colors: Optional[tuple[str, ...]] = None
    region: Optional[tuple[str, ...]] = None
    rows = []
    for node in forms:
        if node.children is None or not node.children:
            raise RelationFileError(f"{where}: stray form at line {node.line}")
        head = _expect_atom(node.children[0], "form head")
        if head == "colors":
            colors = tuple(_expect_atom(a, "color") for a in node.children[1:])
        elif head == "region":
            region = tuple(_expect_atom(a, "color") for a in node.children[1:])
        elif head == "row":
            if colors is None or region is None:
                raise RelationFileError(f"{where}: colors and region must precede rows")
            rows.append([_parse_pattern_cell(c, set(colors)) for c in node.children[1:]])
        else:
            raise RelationFileError(f"{where}: unknown form {head!r} at line {node.line}")
    if colors is None or region is None:
        raise RelationFileError(f"{where}: missing colors or region header")
    try:
        return SideSpec(colors, region, rows)
    except RelationFileError as exc:
        raise RelationFileError(f"{where}: {exc}") from None


# -- the rule registry -----------------------------------------------------


@dataclass(frozen=True)
class RewriteRule:
    """A directed rewrite with its applicability guards.

    ``reverse`` marks a derived rule whose sides were swapped; ``rotated``
    marks a half-turn image.  Both keep the base name so audit trails
    stay readable.
    """

    name: str
    lhs: SideSpec
    rhs: SideSpec
    bidirectional: bool
    guards: tuple[str, ...]
    reverse: bool = False
    rotated: bool = False

    def reversed(self) -> "RewriteRule":
        if not self.bidirectional:
            raise RewriteError(f"rule {self.name} is one-directional")
        if self.rhs.tags:
            raise RewriteError(f"rule {self.name} cannot match its summed side")
        return RewriteRule(
            self.name, self.rhs, self.lhs, True, self.guards,
            reverse=not self.reverse, rotated=self.rotated,
        )

    def rotate180(self) -> "RewriteRule":
        return RewriteRule(
            self.name, self.lhs.rotate180(), self.rhs.rotate180(),
            self.bidirectional, self.guards,
            reverse=self.reverse, rotated=not self.rotated,
        )


_REGISTRY: tuple[tuple[str, bool, tuple[str, ...]], ...] = (
    ("zigzag-s", True, ()),
    ("zigzag-z", True, ()),
    ("cross-cyclic-trace", True, ()),
    ("cross-cyclic-mult", True, ()),
    ("box-merge", False, ()),
    ("box-slide", True, ()),
    ("circle-cw", False, ()),
    ("circle-ccw", False, ()),
    ("splitting", False, ()),
    ("r2-oriented", True, ()),
    ("r2-antiparallel-sum", False, ()),
    ("r2-antiparallel-sum-box", False, ()),
    ("r2-antiparallel-box", False, ("star",)),
    ("r3-oriented", True, ()),
    ("r3-box", False, ("star", "mu-regular", "triple-ratio")),
)

_loaded_rules: Optional[dict[str, RewriteRule]] = None


def load_relations() -> dict[str, RewriteRule]:
    """Parse every shipped relation file once and cache the rules."""
    global _loaded_rules
    if _loaded_rules is not None:
        return _loaded_rules
    base = resources.files(__package__) / "relations"
    rules: dict[str, RewriteRule] = {}
    for name, bidirectional, guards in _REGISTRY:
        sides = {}
        for side in ("lhs", "rhs"):
            path = base / f"{name}.{side}.sexp"
            sides[side] = _parse_side(path.read_text(), f"{name}.{side}")
        lhs, rhs = sides["lhs"], sides["rhs"]
        if lhs.colors != rhs.colors or lhs.region != rhs.region:
            raise RelationFileError(f"{name}: side headers disagree")
        if lhs.bottom != rhs.bottom or lhs.top != rhs.top:
            raise RelationFileError(f"{name}: side boundaries disagree")
        if lhs.tags:
            raise RelationFileError(f"{name}: the matched side may not carry sums")
        if not rhs.vars <= lhs.vars:
            raise RelationFileError(f"{name}: right side invents metavariables")
        rules[name] = RewriteRule(name, lhs, rhs, bidirectional, guards)
    _loaded_rules = rules
    return rules


def relation(name: str) -> RewriteRule:
    try:
        return load_relations()[name]
    except KeyError:
        raise RewriteError(f"unknown relation {name!r}") from None


class RuleSet:
    """A fixed collection of rules, default: the shipped registry order."""

    def __init__(self, rules: Iterable[RewriteRule]):
        self.rules = tuple(rules)
        self.by_name = {r.name: r for r in self.rules}

    @classmethod
    def default(cls) -> "RuleSet":
        return cls(load_relations().values())

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def get(self, name: str) -> RewriteRule:
        return self.by_name[name]


_GUARD_CHECKS = {
    "star": lambda cube: cube.check_star().passed,
    "mu-regular": lambda cube: cube.check_mu_regular().passed,
    "triple-ratio": lambda cube: cube.check_R3().passed,
}


def guards_satisfied(cube: FrobeniusHypercube, rule: RewriteRule) -> bool:
    cache = cube.__dict__.setdefault("_rewrite_guard_cache", {})
    for guard in rule.guards:
        if guard not in cache:
            cache[guard] = _GUARD_CHECKS[guard](cube)
        if not cache[guard]:
            return False
    return True


# -- formal sums of diagrams -----------------------------------------------


class DiagramSum:
    """A finite linear combination of diagrams with rational coefficients.

    Terms with equal diagrams combine and zero terms drop out; term
    order is first appearance, which keeps every consumer deterministic.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[object, Diagram]]):
        acc: dict[Diagram, object] = {}
        for coeff, d in terms:
            c = scalar(coeff)
            if d in acc:
                acc[d] = acc[d] + c
            else:
                acc[d] = c
        self.terms = tuple((c, d) for d, c in acc.items() if c != 0)

    @classmethod
    def single(cls, d: Diagram, coeff=1) -> "DiagramSum":
        return cls([(coeff, d)])

    def scale(self, coeff) -> "DiagramSum":
        return DiagramSum((scalar(coeff) * c, d) for c, d in self.terms)

    def __add__(self, other: "DiagramSum") -> "DiagramSum":
        return DiagramSum(list(self.terms) + list(other.terms))

    def map_diagrams(self, fn) -> "DiagramSum":
        """Apply fn to each diagram; fn may return a Diagram or a sum."""
        out: list[tuple[object, Diagram]] = []
        for c, d in self.terms:
            image = fn(d)
            if isinstance(image, Diagram):
                out.append((c, image))
            else:
                out.extend((c * c2, d2) for c2, d2 in image.terms)
        return DiagramSum(out)

    def _as_dict(self) -> dict:
        return {d: c for c, d in self.terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiagramSum):
            return NotImplemented
        return self._as_dict() == other._as_dict()

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self) -> str:
        inner = " + ".join(f"{c}*{d!r}" for c, d in self.terms[:3])
        more = "" if len(self.terms) <= 3 else f" + {len(self.terms) - 3} more"
        return f"DiagramSum({inner}{more})"


def eval_combination(cube: FrobeniusHypercube, combo) -> Morphism:
    """Evaluate a diagram or a sum of diagrams to one linear map.

    All terms must share their boundary so images add slotwise.
    """
    if isinstance(combo, Diagram):
        return evaluate(cube, combo)
    if not combo.terms:
        raise RewriteError("an empty combination has no boundary to evaluate")
    parts = [(c, evaluate(cube, d)) for c, d in combo.terms]
    domain = parts[0][1].domain
    codomain = parts[0][1].codomain
    for _, m in parts:
        if m.domain != domain or m.codomain != codomain:
            raise RewriteError("the terms of the combination have different boundaries")
    images = {}
    for idx in domain_indices(domain):
        total = None
        for c, m in parts:
            piece = m.images[idx].scale(c)
            total = piece if total is None else total + piece
        images[idx] = total
    return Morphism(domain, codomain, images)


# -- matching and application ----------------------------------------------


@dataclass(frozen=True)
class Match:
    level: int
    offset: int
    colormap: tuple[tuple[str, str], ...]
    root: Subset
    bindings: tuple[tuple[str, Polynomial], ...]
    length: int


def _interfaces(bottom, events):
    wires = list(bottom)
    out = [tuple(wires)]
    for cell, pos in events:
        n = len(cell.bottom())
        wires[pos : pos + n] = list(cell.top())
        out.append(tuple(wires))
    return out


def _cells_unify(pcell, ccell, unify_color) -> bool:
    if isinstance(pcell, PatternBox):
        return isinstance(ccell, Box)
    if isinstance(pcell, Cup) and isinstance(ccell, Cup):
        return pcell.clockwise == ccell.clockwise and unify_color(pcell.color, ccell.color)
    if isinstance(pcell, Cap) and isinstance(ccell, Cap):
        return pcell.clockwise == ccell.clockwise and unify_color(pcell.color, ccell.color)
    if isinstance(pcell, Cross) and isinstance(ccell, Cross):
        return (
            pcell.kind == ccell.kind
            and unify_color(pcell.left_color, ccell.left_color)
            and unify_color(pcell.right_color, ccell.right_color)
        )
    return False


def match_side(
    cube: FrobeniusHypercube,
    d: Diagram,
    side: SideSpec,
    level: int,
    offset: int,
    events=None,
    interfaces=None,
) -> Optional[Match]:
    """Match one side of a relation as a window at the given event index
    and wire offset.  Returns the color map, root and metavariable
    bindings, or None."""
    if side.tags:
        raise RewriteError("cannot match a side that carries a dual basis sum")
    if events is None:
        events = d.events()
        interfaces = _interfaces(d.bottom_boundary, events)
    if level < 0 or offset < 0 or level + len(side.pattern) > len(events):
        return None
    wires = interfaces[level]
    width = len(side.bottom)
    if offset + width > len(wires):
        return None
    colormap: dict[str, str] = {}
    used: set[str] = set()

    def unify_color(abstract: str, concrete: str) -> bool:
        bound = colormap.get(abstract)
        if bound is not None:
            return bound == concrete
        if concrete in used:
            return False
        colormap[abstract] = concrete
        used.add(concrete)
        return True

    for (ac, au), (cc, cu) in zip(side.bottom, wires[offset : offset + width]):
        if au != cu or not unify_color(ac, cc):
            return None
    payload_pairs = []
    for k, (pcell, poff) in enumerate(side.pattern):
        ccell, coff = events[level + k]
        if coff != offset + poff:
            return None
        if not _cells_unify(pcell, ccell, unify_color):
            return None
        if isinstance(pcell, PatternBox):
            payload_pairs.append((pcell.payload, ccell.poly))
    for c in side.region:
        if c not in colormap:
            return None
    left = _fold_region(frozenset(d.region), wires[:offset])
    mapped_region = frozenset(colormap[c] for c in side.region)
    if not mapped_region <= left:
        return None
    root = left - mapped_region
    if root & set(colormap.values()):
        return None
    bindings: dict[str, Polynomial] = {}
    for payload, poly in payload_pairs:
        if isinstance(payload, PayloadVar):
            bound = bindings.get(payload.name)
            if bound is not None and bound != poly:
                return None
            bindings[payload.name] = poly
        else:
            if _payload_vars(payload):
                raise RewriteError(
                    "matched payloads may not mix structure and metavariables"
                )
            try:
                expected = _eval_payload(cube, payload, colormap, root, {}, {})
            except NoMatch:
                return None
            if expected != poly:
                return None
    return Match(
        level,
        offset,
        tuple(sorted(colormap.items())),
        root,
        tuple(sorted(bindings.items())),
        len(side.pattern),
    )


def find_matches(cube: FrobeniusHypercube, d: Diagram, rule: RewriteRule) -> list[Match]:
    """Every window where the rule's left side matches, in reading order."""
    events = d.events()
    interfaces = _interfaces(d.bottom_boundary, events)
    out = []
    pattern = rule.lhs.pattern
    for level in range(len(events) + 1):
        if pattern:
            if level + len(pattern) > len(events):
                break
            offsets = [events[level][1] - pattern[0][1]]
        else:
            offsets = range(len(interfaces[level]) + 1)
        for offset in offsets:
            m = match_side(cube, d, rule.lhs, level, offset, events, interfaces)
            if m is not None:
                out.append(m)
    return out


def apply_rule(cube: FrobeniusHypercube, d: Diagram, rule: RewriteRule, position) -> DiagramSum:
    """Rewrite the window at ``position``, returning the rewritten
    diagram as a combination (dual basis right sides expand to sums).

    ``position`` is a Match or a (level, offset) pair into the event
    list.  Raises NoMatch when the window does not fit, a guard is
    unmet, or an instantiated box would leave the ring of its region.
    """
    if not guards_satisfied(cube, rule):
        raise NoMatch(f"rule {rule.name} needs {','.join(rule.guards)} on this cube")
    events = d.events()
    if isinstance(position, Match):
        m = position
    else:
        level, offset = position
        m = match_side(cube, d, rule.lhs, level, offset)
        if m is None:
            raise NoMatch(
                f"rule {rule.name} does not match at level {level}, offset {offset}"
            )
    colormap = dict(m.colormap)
    bindings = dict(m.bindings)
    replacement = rule.rhs.instantiate(cube, colormap, m.root, bindings)
    out = []
    for coeff, piece in replacement:
        shifted = [(cell, pos + m.offset) for cell, pos in piece.events()]
        new_events = events[: m.level] + shifted + events[m.level + m.length :]
        out.append((coeff, Diagram.from_events(d.region, d.bottom_boundary, new_events)))
    return DiagramSum(out)


# -- the relation checker --------------------------------------------------


def _sample_bindings(cube, rule, colormap, root, rng):
    names = sorted(rule.lhs.vars | rule.rhs.vars)
    if not names:
        return [{}]
    ones = {v: Polynomial.one(cube.nvars) for v in names}
    sampled = {}
    for v in names:
        abstract = rule.lhs.bare_var_regions.get(v, frozenset())
        abstract |= rule.rhs.bare_var_regions.get(v, frozenset())
        pocket = root | {colormap[c] for c in abstract}
        sampled[v] = cube.random_invariant(rng, frozenset(pocket))
    return [ones, sampled]


def _variant_holds(cube, rule, colormap, root, rot, bindings) -> bool:
    lhs = rule.lhs.instantiate(cube, colormap, root, bindings)
    rhs = rule.rhs.instantiate(cube, colormap, root, bindings)
    if rot:
        lhs = [(c, d.rotate180()) for c, d in lhs]
        rhs = [(c, d.rotate180()) for c, d in rhs]
    left = eval_combination(cube, DiagramSum(lhs))
    right = eval_combination(cube, DiagramSum(rhs))
    return morphism_equal(left, right)


def _root_choices(cube, image):
    rest = [c for c in cube.colors if c not in image]
    out = []
    for r in range(len(rest) + 1):
        for combo in itertools.combinations(rest, r):
            out.append(frozenset(combo))
    return out


def _kind_for(lower: bool, upper: bool) -> str:
    return {
        (True, True): "up",
        (False, False): "down",
        (True, False): "right",
        (False, True): "left",
    }[(lower, upper)]


def _triple_slide_sides(colors, orientations, root):
    """Both sides of the three-strand slide for one orientation pattern."""
    A, B, C = colors
    oA, oB, oC = orientations
    region = frozenset(root) | {c for c, o in zip(colors, orientations) if not o}
    lhs = Diagram(
        region,
        [
            [Cross(A, B, _kind_for(oA, oB)), Id(C, oC)],
            [Id(B, oB), Cross(A, C, _kind_for(oA, oC))],
            [Cross(B, C, _kind_for(oB, oC)), Id(A, oA)],
        ],
    )
    rhs = Diagram(
        region,
        [
            [Id(A, oA), Cross(B, C, _kind_for(oB, oC))],
            [Cross(A, C, _kind_for(oA, oC)), Id(B, oB)],
            [Id(C, oC), Cross(A, B, _kind_for(oA, oB))],
        ],
    )
    return lhs, rhs


_UNORIENTED_TRIANGLES = tuple(
    pattern
    for pattern in itertools.product((True, False), repeat=3)
    if pattern not in ((True, False, True), (False, True, False))
)


def check_relations(
    cube: FrobeniusHypercube,
    seed: int = 0,
    names: Optional[Iterable[str]] = None,
) -> CheckReport:
    """Replay shipped relations on the cube across every injective
    color assignment, every disjoint root region and both half-turn
    rotations, sampling metavariables deterministically from the seed.
    Relations with a distinguished box value additionally compare that
    box against its closed form.  ``names`` restricts the run to the
    listed relations; the default is all of them."""
    rules = list(RuleSet.default())
    if names is not None:
        wanted = list(names)
        known = {r.name for r in rules}
        for n in wanted:
            if n not in known:
                raise RewriteError(f"unknown relation {n!r}")
        rules = [r for r in rules if r.name in set(wanted)]
    report = CheckReport("relation suite")
    for rule in rules:
        if not guards_satisfied(cube, rule):
            report.add(f"{rule.name}: skipped, needs {','.join(rule.guards)}", True)
            continue
        if rule.name == "r3-oriented":
            _check_triple_slides(cube, report)
            continue
        k = len(rule.lhs.colors)
        for image in itertools.permutations(cube.colors, k):
            colormap = dict(zip(rule.lhs.colors, image))
            for root in _root_choices(cube, image):
                rng = random.Random(
                    f"{seed}:{rule.name}:{','.join(image)}:{','.join(sorted(root))}"
                )
                samples = _sample_bindings(cube, rule, colormap, root, rng)
                for rot in (False, True):
                    label = (
                        f"{rule.name}({','.join(image)})"
                        f" root={cube.format_subset(root)}"
                        + (" rotated" if rot else "")
                    )
                    ok = True
                    witness = None
                    for bindings in samples:
                        try:
                            good = _variant_holds(cube, rule, colormap, root, rot, bindings)
                        except NoMatch as exc:
                            good, witness = False, str(exc)
                        if not good:
                            ok = False
                            if witness is None:
                                shown = {
                                    v: format_polynomial(f) for v, f in bindings.items()
                                }
                                witness = f"sides differ at {shown}" if shown else "sides differ"
                            break
                    report.add(label, ok, witness)
                _box_value_rows(cube, rule, colormap, image, root, report)
    return report


def _check_triple_slides(cube, report):
    for pattern in _UNORIENTED_TRIANGLES:
        arrows = ",".join("up" if o else "down" for o in pattern)
        for image in itertools.permutations(cube.colors, 3):
            for root in _root_choices(cube, image):
                lhs, rhs = _triple_slide_sides(image, pattern, root)
                ok = morphism_equal(evaluate(cube, lhs), evaluate(cube, rhs))
                report.add(
                    f"r3-oriented({','.join(image)})"
                    f" root={cube.format_subset(root)} [{arrows}]",
                    ok,
                    None if ok else "sides differ",
                )


def _payload_total(cube, payload, colormap, root):
    """The payload value summed over its dual basis tags."""
    tags = _payload_tags(payload)
    names = list(tags)
    ranges = []
    for tag in names:
        lower_abs, gamma_abs = tags[tag]
        lower = root | {colormap[c] for c in lower_abs}
        ranges.append(range(cube.edge(lower, colormap[gamma_abs]).rank))
    total = Polynomial.zero(cube.nvars)
    for combo in itertools.product(*ranges):
        tag_index = dict(zip(names, combo))
        total = total + _eval_payload(cube, payload, colormap, root, {}, tag_index)
    return total


def _box_value_rows(cube, rule, colormap, image, root, report):
    if rule.name == "r2-antiparallel-box":
        payload = next(
            cell.payload for cell, _ in rule.rhs.pattern if isinstance(cell, PatternBox)
        )
        value = _payload_total(cube, payload, colormap, root)
        a = root | {colormap["A"]}
        b = root | {colormap["B"]}
        expected = exact_divide(cube.mu(root, a | b), cube.mu(root, a) * cube.mu(root, b))
        ok = expected is not None and expected == value
        report.add(
            f"{rule.name}({','.join(image)}) root={cube.format_subset(root)}:"
            " box equals the two-color quotient",
            ok,
            None if ok else f"box {format_polynomial(value)}",
        )
    if rule.name == "r3-box" and not root:
        payload = next(
            cell.payload for cell, _ in rule.lhs.pattern if isinstance(cell, PatternBox)
        )
        value = _eval_payload(cube, payload, colormap, root, {}, {})
        expected = cube.pi(set(image))
        ok = expected is not None and expected == value
        report.add(
            f"{rule.name}({','.join(image)}): box equals the triple overlap factor",
            ok,
            None if ok else f"box {format_polynomial(value)}",
        )


# -- rule instances used by the reducers -----------------------------------

_rule_cache: Optional[dict[str, list[RewriteRule]]] = None


def _reducer_rules() -> dict[str, list[RewriteRule]]:
    cache: dict[str, list[RewriteRule]] = {}

    def put(key, *instances):
        cache.setdefault(key, []).extend(instances)

    for name in ("zigzag-s", "zigzag-z"):
        base = relation(name)
        put("unwiggle", base.reversed(), base.reversed().rotate180())
        put("wiggle", base, base.rotate180())
    put("merge", relation("box-merge"))
    slide = relation("box-slide")
    put("slide", slide, slide.reversed(), slide.rotate180(), slide.reversed().rotate180())
    put("circle", relation("circle-cw"), relation("circle-ccw"))
    for name in ("r2-oriented", "r2-antiparallel-box", "r2-antiparallel-sum"):
        base = relation(name)
        put("bigon", base, base.rotate180())
    sum_box = relation("r2-antiparallel-sum-box")
    put("bigon-box", sum_box, sum_box.rotate180())
    for name in ("cross-cyclic-trace", "cross-cyclic-mult"):
        base = relation(name)
        put("cyclic", base, base.reversed(), base.rotate180(), base.reversed().rotate180())
    return cache


def _rules(key: str) -> list[RewriteRule]:
    global _rule_cache
    if _rule_cache is None:
        _rule_cache = _reducer_rules()
    return _rule_cache[key]


def _try_rules(cube, d, key, level, offset):
    for inst in _rules(key):
        try:
            return inst, apply_rule(cube, d, inst, (level, offset))
        except NoMatch:
            continue
    return None


# -- reduction strategies --------------------------------------------------


def _normalized(d: Diagram) -> Diagram:
    return d.interchange_normal_form()


def _unit_box(nvars: int) -> Box:
    return Box(Polynomial.one(nvars))


def _find_adjacent_boxes(events):
    for i in range(len(events) - 1):
        (a, pa), (b, pb) = events[i], events[i + 1]
        if isinstance(a, Box) and isinstance(b, Box) and pa == pb:
            return i, pa
    return None


def _lift_offset(g: int, cap_offset: int) -> Optional[int]:
    """New offset of a gap event moved from just below a cap to just
    above it, or None when the event sits in the cap's own pocket."""
    if g <= cap_offset:
        return g
    if g == cap_offset + 1:
        return None
    return g - 2


def _find_unwiggle(cube, d, events):
    """A reversed zigzag window, looking through boxes parked between
    the cup and the cap.  Such boxes commute upward past the cap, which
    is a free interchange, so the window closes without extra moves."""
    for i, (cell, p) in enumerate(events):
        if not isinstance(cell, Cup):
            continue
        j = i + 1
        boxes = []
        while j < len(events) and isinstance(events[j][0], Box):
            boxes.append(events[j])
            j += 1
        if j >= len(events) or not isinstance(events[j][0], Cap):
            continue
        cap_event = events[j]
        lifted = []
        ok = True
        for box, g in boxes:
            ng = _lift_offset(g, cap_event[1])
            if ng is None:
                ok = False
                break
            lifted.append((box, ng))
        if not ok:
            continue
        candidate = events[:i] + [events[i], cap_event] + lifted + events[j + 1 :]
        try:
            lifted_diagram = Diagram.from_events(d.region, d.bottom_boundary, candidate)
        except Exception:
            continue
        for inst in _rules("unwiggle"):
            offset = p - inst.lhs.pattern[0][1]
            m = match_side(cube, lifted_diagram, inst.lhs, i, offset)
            if m is not None:
                return inst, lifted_diagram, m
    return None


def _circle_window(events, bottom):
    """The best contiguous cup-to-cap window on an uncrossed circle.

    Wire identities are tracked so nesting and crossings are judged
    exactly.  Windows whose interior is only boxes (or empty) are
    preferred since a circle move applies to them directly; otherwise
    the first sound window is reported for interior extraction.
    Returns (cup index, cap index, interior_is_boxes) or None.
    """
    ids = list(range(len(bottom)))
    fresh = len(bottom)
    history = [list(ids)]
    for cell, pos in events:
        nb = len(cell.bottom())
        if isinstance(cell, Cross):
            ids[pos], ids[pos + 1] = ids[pos + 1], ids[pos]
        else:
            new = [fresh + j for j in range(len(cell.top()))]
            fresh += len(new)
            ids[pos : pos + nb] = new
        history.append(list(ids))
    fallback = None
    for i, (cell, p) in enumerate(events):
        if not isinstance(cell, Cup):
            continue
        a, b = history[i + 1][p], history[i + 1][p + 1]
        boxes_only = True
        window = None
        for k in range(i + 1, len(events)):
            e, o = events[k]
            level = history[k]
            if a not in level or b not in level:
                break
            pa, pb = level.index(a), level.index(b)
            nb = len(e.bottom())
            if isinstance(e, Cap) and o == pa and pb == pa + 1:
                window = (i, k)
                break
            if pa in range(o, o + nb) or pb in range(o, o + nb):
                break
            if nb == 0:
                inside = pa < o <= pb
            else:
                inside = o > pa and o + nb - 1 < pb
            if not inside:
                break
            if not isinstance(e, Box):
                boxes_only = False
        if window is None:
            continue
        if boxes_only:
            return window + (True,)
        if fallback is None:
            fallback = window + (False,)
    return fallback


def _extract_interior(cube, d, start, end, audit, depth):
    """Simplify the closed interior of the circle events[start..end] and
    splice each resulting box back inside the circle."""
    events = d.events()
    bottom = d.bottom_boundary
    ids = list(range(len(bottom)))
    fresh = len(bottom)
    history = [list(ids)]
    for cell, pos in events:
        nb = len(cell.bottom())
        if isinstance(cell, Cross):
            ids[pos], ids[pos + 1] = ids[pos + 1], ids[pos]
        else:
            new = [fresh + j for j in range(len(cell.top()))]
            fresh += len(new)
            ids[pos : pos + nb] = new
        history.append(list(ids))
    p = events[start][1]
    a = history[start + 1][p]
    interfaces = _interfaces(bottom, events)
    inner_region = _fold_region(frozenset(d.region), interfaces[start + 1][: p + 1])
    interior = []
    for k in range(start + 1, end):
        cell, o = events[k]
        pa = history[k].index(a)
        interior.append((cell, o - pa - 1))
    inner = Diagram.from_events(inner_region, (), interior)
    reduced = simplify_two_color(cube, inner, audit=audit, _depth=depth + 1)
    out = []
    for coeff, t in reduced:
        tev = t.events()
        if not tev:
            poly = Polynomial.one(cube.nvars)
        elif len(tev) == 1 and isinstance(tev[0][0], Box):
            poly = tev[0][0].poly
        else:
            raise RewriteError("a closed interior did not reduce to a box")
        new_events = events[: start + 1] + [(Box(poly), p + 1)] + events[end:]
        out.append((coeff, Diagram.from_events(d.region, bottom, new_events)))
    return DiagramSum(out)


def _bigon_step(cube, d, events, audit):
    for i in range(len(events) - 1):
        a, pa = events[i]
        b, pb = events[i + 1]
        if isinstance(a, Cross) and isinstance(b, Cross) and pa == pb:
            got = _try_rules(cube, d, "bigon", i, pa)
            if got is not None:
                audit.append(got[0].name)
                return got[1]
    for i in range(len(events) - 2):
        a, pa = events[i]
        mid, pm = events[i + 1]
        c, pc = events[i + 2]
        if (
            isinstance(a, Cross)
            and isinstance(c, Cross)
            and isinstance(mid, Box)
            and pa == pc
            and pm == pa + 1
        ):
            got = _try_rules(cube, d, "bigon-box", i, pa)
            if got is None:
                # a pocket box blocking a plain bigon: slide it clear
                got = _try_rules(cube, d, "slide", i + 1, pm - 1)
            if got is None:
                got = _try_rules(cube, d, "slide", i + 1, pm)
            if got is not None:
                audit.append(got[0].name)
                return got[1]
    return None


def _primary_step(cube, d, audit, depth, two_color=True):
    """Apply the best available strictly simplifying move to one
    diagram, or None.  Priority: box merging, wiggle removal, bigon
    moves, circle collapse."""
    events = d.events()
    if not events and d.is_closed():
        audit.append("box-unit")
        return DiagramSum.single(
            Diagram.from_events(d.region, (), [(_unit_box(cube.nvars), 0)])
        )
    hit = _find_adjacent_boxes(events)
    if hit is not None:
        got = _try_rules(cube, d, "merge", hit[0], hit[1])
        if got is not None:
            audit.append(got[0].name)
            return got[1]
    found = _find_unwiggle(cube, d, events)
    if found is not None:
        inst, lifted_diagram, m = found
        audit.append(inst.name)
        return apply_rule(cube, lifted_diagram, inst, m)
    if two_color:
        step = _bigon_step(cube, d, events, audit)
        if step is not None:
            return step
    win = _circle_window(events, d.bottom_boundary)
    if win is not None:
        start, end, boxes_only = win
        p = events[start][1]
        interior = events[start + 1 : end]
        if boxes_only and not interior:
            audit.append("box-unit")
            new_events = (
                events[: start + 1]
                + [(_unit_box(cube.nvars), p + 1)]
                + events[start + 1 :]
            )
            return DiagramSum.single(
                Diagram.from_events(d.region, d.bottom_boundary, new_events)
            )
        if boxes_only and len(interior) == 1:
            got = _try_rules(cube, d, "circle", start, p)
            if got is not None:
                audit.append(got[0].name)
                return got[1]
        if not boxes_only and two_color:
            return _extract_interior(cube, d, start, end, audit, depth)
    return None


def _measure(d: Diagram):
    events = d.events()
    crossings = sum(1 for c, _ in events if isinstance(c, Cross))
    cups = sum(1 for c, _ in events if isinstance(c, Cup))
    return (len(closed_components(d)), crossings, cups, len(events))


def _adjacent_swaps(d: Diagram) -> list[Diagram]:
    """Diagrams one interchange away: each horizontally disjoint
    adjacent pair of events traded, with offsets recomputed for the new
    stacking order.  A wireless event at a cap's spot may pass on
    either side of it, giving two neighbours for that pair."""
    events = d.events()
    out = []
    for j in range(len(events) - 1):
        (a, pa), (b, pb) = events[j], events[j + 1]
        na_b, na_t = len(a.bottom()), len(a.top())
        nb_b, nb_t = len(b.bottom()), len(b.top())
        if na_b == na_t == 0 and nb_b == nb_t == 0:
            continue
        swapped = []
        if pb + nb_b < pa or (pb + nb_b == pa and (nb_b or na_b + na_t)):
            swapped.append([(b, pb), (a, pa + nb_t - nb_b)])
        if pb >= pa + na_t:
            swapped.append([(b, pb - na_t + na_b), (a, pa)])
        for mid in swapped:
            try:
                out.append(
                    Diagram.from_events(
                        d.region,
                        d.bottom_boundary,
                        events[:j] + mid + events[j + 2 :],
                    )
                )
            except InconsistentDiagram:
                continue
    return out


def _unstick(cube, d, audit, depth, max_states=3000, max_depth=8):
    """Breadth-first search through the measure-preserving moves
    (interchanges, box slides and crossing rotation around extrema) for
    a state where a primary move applies; returns that move already
    applied, with the path logged, or None."""
    seen = {d}
    frontier = [(d, [])]
    while frontier:
        state, path = frontier.pop(0)
        if path:
            probe: list[str] = []
            step = _primary_step(cube, state, probe, depth)
            if step is not None:
                audit.extend(path)
                audit.extend(probe)
                return step
        if len(path) >= max_depth or len(seen) > max_states:
            continue
        neighbours = [(n, "interchange") for n in _adjacent_swaps(state)]
        for key in ("slide", "cyclic"):
            for inst in _rules(key):
                for m in find_matches(cube, state, inst):
                    try:
                        result = apply_rule(cube, state, inst, m)
                    except NoMatch:
                        continue
                    if len(result) != 1:
                        continue
                    neighbours.append((result.terms[0][1], inst.name))
        for raw, name in neighbours:
            nxt = _normalized(raw)
            if nxt in seen:
                continue
            seen.add(nxt)
            frontier.append((nxt, path + [name]))
    return None


def reduce_one_color_closed(cube: FrobeniusHypercube, d: Diagram, audit=None) -> Diagram:
    """Collapse a closed one-color diagram to a single box.

    Only box merging, the two wiggle removals and the two circle
    collapses are used; the applied rule names accumulate in ``audit``.
    """
    log = audit if audit is not None else []
    if not d.is_closed():
        raise RewriteError("the diagram has loose ends")
    strand_colors = set()
    for row in d.slices:
        for cell in row:
            if isinstance(cell, Cross):
                raise RewriteError("crossings need the two-color simplifier")
            if not isinstance(cell, Box):
                strand_colors.add(cell.color)
    if len(strand_colors) > 1:
        raise RewriteError("more than one strand color")
    work = _normalized(d)
    budget = 6 * (len(work.events()) + 4)
    for _ in range(budget):
        events = work.events()
        if len(events) == 1 and isinstance(events[0][0], Box):
            return work
        step = _primary_step(cube, work, log, 0, two_color=False)
        if step is None:
            raise RewriteError("no applicable one-color move")
        if len(step) != 1 or step.terms[0][0] != 1:
            raise RewriteError("a one-color move produced a proper sum")
        work = _normalized(step.terms[0][1])
    raise RewriteError("one-color reduction exceeded its step budget")


def simplify_two_color(
    cube: FrobeniusHypercube, d: Diagram, audit=None, _depth: int = 0
) -> DiagramSum:
    """Remove every closed component from a diagram with at most two
    strand colors, returning an equivalent combination of diagrams.

    Closed pieces collapse through bigon moves, circle collapses and
    the box calculus; when no direct move applies a bounded search over
    the measure-preserving moves looks for an unblocking sequence.  A
    fully closed input comes back as a single box."""
    log = audit if audit is not None else []
    if _depth > 16:
        raise RewriteError("interior recursion nested too deep")
    queue = [(ONE, _normalized(d))]
    done: list[tuple[object, Diagram]] = []
    rounds = 0
    while queue:
        rounds += 1
        if rounds > 4000:
            raise RewriteError("simplification exceeded its step budget")
        coeff, t = queue.pop(0)
        step = _primary_step(cube, t, log, _depth)
        if step is None and closed_components(t):
            step = _unstick(cube, t, log, _depth)
            if step is None:
                raise RewriteError("a closed component resists the shipped moves")
        if step is None:
            done.append((coeff, t))
            continue
        for c2, t2 in step:
            queue.append((coeff * c2, _normalized(t2)))
    return _collapse_boxes(cube, DiagramSum(done))


def _collapse_boxes(cube, combo: DiagramSum) -> DiagramSum:
    """Merge closed single-box terms (and closed empty terms) sharing a
    region into one box carrying the combined polynomial."""
    merged: dict[frozenset, Polynomial] = {}
    rest = []
    for coeff, t in combo:
        events = t.events()
        if t.is_closed() and not events:
            poly = Polynomial.one(cube.nvars)
        elif t.is_closed() and len(events) == 1 and isinstance(events[0][0], Box):
            poly = events[0][0].poly
        else:
            rest.append((coeff, t))
            continue
        prior = merged.get(t.region, Polynomial.zero(cube.nvars))
        merged[t.region] = prior + poly.scale(coeff)
    for region, poly in merged.items():
        rest.append((ONE, Diagram.from_events(region, (), [(Box(poly), 0)])))
    return DiagramSum(rest)


# -- random diagram generators ---------------------------------------------


def random_one_color_closed(
    cube: FrobeniusHypercube,
    color: str,
    rng: random.Random,
    max_depth: int = 10,
    wiggles: int = 3,
) -> Diagram:
    """A random closed one-color diagram: nested circles with boxed
    pockets, plus a few wiggles inserted through the zigzag moves."""

    def pile(depth: int, ambient: frozenset) -> Diagram:
        parts = []
        for _ in range(rng.randint(1, 2)):
            if depth < max_depth and rng.random() < 0.6:
                parts.append(circle(depth + 1, ambient))
            else:
                parts.append(Diagram(ambient, [[Box(cube.random_invariant(rng, ambient))]]))
        out = parts[0]
        for extra in parts[1:]:
            out = out.stack(extra)
        return out

    def circle(depth: int, ambient: frozenset) -> Diagram:
        cw = color in ambient
        inside = ambient - {color} if cw else ambient | {color}
        left, right = (False, True) if cw else (True, False)
        rows: list[list] = [[Cup(color, cw)]]
        if rng.random() < 0.8:
            for row in pile(depth, inside).slices:
                rows.append([Id(color, left)] + list(row) + [Id(color, right)])
        rows.append([Cap(color, cw)])
        return Diagram(ambient, rows)

    ambient = frozenset({color}) if rng.random() < 0.5 else frozenset()
    d = pile(0, ambient)
    for _ in range(rng.randint(0, wiggles)):
        d = _normalized(d)
        options = []
        for inst in _rules("wiggle"):
            options.extend((inst, m) for m in find_matches(cube, d, inst))
        if not options:
            break
        inst, m = options[rng.randrange(len(options))]
        d = apply_rule(cube, d, inst, m).terms[0][1]
    return d


def random_two_color_diagram(
    cube: FrobeniusHypercube,
    colors: Sequence[str],
    rng: random.Random,
    max_slices: int = 14,
    closed: bool = False,
) -> Diagram:
    """A random consistent diagram over the given colors, built from
    admissible cells; with ``closed`` the boundary is empty."""
    pair = tuple(colors)
    for _ in range(400):
        d = _random_stack(cube, pair, rng, max_slices, closed)
        if d is not None:
            return d
    raise RewriteError("could not sample a diagram with these constraints")


def _random_stack(cube, pair, rng, max_slices, closed):
    region = frozenset(rng.sample(pair, rng.randint(0, len(pair))))
    wires: list[tuple[str, bool]] = []
    if not closed:
        left = set(region)
        for _ in range(rng.randint(0, 3)):
            c = rng.choice(pair)
            up = c not in left
            wires.append((c, up))
            left.add(c) if up else left.discard(c)
    bottom = tuple(wires)
    events: list[tuple[object, int]] = []
    boxes = 0
    for _ in range(rng.randint(1, max_slices)):
        choices = _admissible_cells(cube, region, wires, pair, rng, boxes < 2)
        if not choices:
            break
        cell, pos = choices[rng.randrange(len(choices))]
        if isinstance(cell, Box):
            boxes += 1
        events.append((cell, pos))
        n = len(cell.bottom())
        wires[pos : pos + n] = list(cell.top())
    if closed:
        for _ in range(max_slices):
            if not wires:
                break
            spot = None
            for i in range(len(wires) - 1):
                (c1, u1), (c2, u2) = wires[i], wires[i + 1]
                if c1 == c2 and u1 != u2:
                    spot = (i, Cap(c1, not u1))
                    break
            if spot is None:
                return None
            events.append((spot[1], spot[0]))
            wires[spot[0] : spot[0] + 2] = []
        if wires:
            return None
    if len(events) > max_slices or not events:
        return None
    return Diagram.from_events(region, bottom, events)


def _admissible_cells(cube, region, wires, pair, rng, allow_box):
    left_regions = [frozenset(region)]
    cur = set(region)
    for c, up in wires:
        cur.add(c) if up else cur.discard(c)
        left_regions.append(frozenset(cur))
    out = []
    for gap in range(len(wires) + 1):
        here = left_regions[gap]
        for c in pair:
            out.append((Cup(c, c in here), gap))
        if allow_box:
            out.append((Box(cube.random_invariant(rng, here)), gap))
    for i in range(len(wires) - 1):
        (c1, u1), (c2, u2) = wires[i], wires[i + 1]
        if c1 == c2 and u1 != u2:
            out.append((Cap(c1, not u1), i))
        if c1 != c2:
            out.append((Cross(c1, c2, _kind_for(u1, u2)), i))
    return out
