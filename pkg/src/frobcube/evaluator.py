"""Evaluation of strand diagrams into linear maps between tensor modules.

A diagram with consistent region labels determines a linear map from the
tensor module of its bottom boundary to that of its top boundary.  The
map is assembled slice by slice: each slice carries at most one event,
the event acts locally on the slots it touches, and the result is
renormalized before the next slice is read.

Local actions are the structure maps of the hypercube edges:

* a box multiplies the gap it sits in by its decoration,
* a clockwise cup inserts 1 (x) 1 (the subring inclusion),
* a counterclockwise cup inserts the coproduct of 1,
* a clockwise cap traces the product of its two factors down the edge,
  a counterclockwise cap just multiplies them,
* crossings regroup the product of their two factors into whichever
  outgoing slot can hold it; the one orientation whose product cannot
  simply slide over (down-then-up on the left) expands the product
  through a coproduct and traces the stray leg.

Morphisms are stored extensionally: the image of every basis pure
tensor of the domain.  Composition, horizontal juxtaposition and
equality all reduce to operations on those images.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Mapping, Sequence

from .diagram import Box, Cap, Cross, Cup, Diagram, Id, check_consistency
from .frobenius import FrobeniusHypercube, MembershipError
from .polyring import Polynomial
from .tensor import PathSignature, TensorElement


def domain_indices(signature: PathSignature) -> Iterator[tuple[int, ...]]:
    """Basis index tuples of the tensor module, in product order."""
    ranges = [range(signature.slot_rank(i)) for i in range(signature.slots)]
    return itertools.product(*ranges)


def basis_factors(signature: PathSignature, index: tuple[int, ...]) -> tuple[Polynomial, ...]:
    """The factor list of the basis pure tensor at the given index."""
    cube = signature.cube
    factors = []
    for i in range(signature.slots):
        lower, color, up = signature.step(i)
        if up:
            factors.append(cube.edge(lower, color).basis[index[i]])
        else:
            factors.append(Polynomial.one(cube.nvars))
    return tuple(factors)


class Morphism:
    """A linear map between two tensor modules with shared endpoints.

    Stored as the images of the basis pure tensors of the domain, keyed
    by basis index tuple.  Application to a general element expands it
    in normal form and recombines the images with the tails multiplied
    in from the right.
    """

    def __init__(
        self,
        domain: PathSignature,
        codomain: PathSignature,
        images: Mapping[tuple[int, ...], TensorElement],
    ):
        if domain.cube is not codomain.cube:
            raise MembershipError("domain and codomain over different hypercubes")
        if domain.left != codomain.left or domain.right != codomain.right:
            raise MembershipError(
                "domain and codomain must share their endpoint regions"
            )
        self.domain = domain
        self.codomain = codomain
        stored: dict[tuple[int, ...], TensorElement] = {}
        for idx in domain_indices(domain):
            if idx not in images:
                raise MembershipError(f"missing image for basis index {idx}")
            img = images[idx]
            if img.signature != codomain:
                raise MembershipError(
                    f"image at {idx} lives on {img.signature!r}, not the codomain"
                )
            stored[idx] = img.normalized()
        self.images = stored

    @classmethod
    def identity(cls, signature: PathSignature) -> "Morphism":
        images = {
            idx: TensorElement.pure(signature, basis_factors(signature, idx))
            for idx in domain_indices(signature)
        }
        return cls(signature, signature, images)

    def apply(self, element: TensorElement) -> TensorElement:
        if element.signature != self.domain:
            raise MembershipError("element does not live on the domain")
        terms = []
        for idx, tail in element.normalize().items():
            for factors, img_tail in self.images[idx].terms:
                terms.append((factors, img_tail * tail))
        return TensorElement(self.codomain, terms, check=False).normalized()

    def then(self, other: "Morphism") -> "Morphism":
        """Vertical composition: self first, then other on top."""
        if other.domain != self.codomain:
            raise MembershipError(
                "codomain of the first map must be the domain of the second"
            )
        images = {idx: other.apply(img) for idx, img in self.images.items()}
        return Morphism(self.domain, other.codomain, images)

    def tensor(self, other: "Morphism") -> "Morphism":
        """Horizontal juxtaposition along a shared junction region."""
        cube = self.domain.cube
        domain = PathSignature(
            cube, self.domain.regions + other.domain.regions[1:]
        )
        codomain = PathSignature(
            cube, self.codomain.regions + other.codomain.regions[1:]
        )
        images = {}
        for i1, img1 in self.images.items():
            for i2, img2 in other.images.items():
                images[i1 + i2] = img1.tensor(img2)
        return Morphism(domain, codomain, images)

    def closed_value(self) -> Polynomial:
        """For endomorphisms of an empty path: the image of 1."""
        if self.domain.slots or self.codomain.slots:
            raise MembershipError("closed_value needs empty boundaries")
        nf = self.images[()].normalize()
        return nf.get((), Polynomial.zero(self.domain.cube.nvars))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Morphism):
            return NotImplemented
        if self.domain != other.domain or self.codomain != other.codomain:
            return False
        return all(
            self.images[idx] == other.images[idx]
            for idx in domain_indices(self.domain)
        )

    def __repr__(self) -> str:
        return (
            f"Morphism({self.domain.format()} => {self.codomain.format()},"
            f" rank {len(self.images)})"
        )

    def format_text(self) -> str:
        lines = [f"{self.domain.format()} => {self.codomain.format()}"]
        for idx in domain_indices(self.domain):
            source = TensorElement.pure(self.domain, basis_factors(self.domain, idx))
            lines.append(f"  {source.render()}")
            lines.append(f"    |-> {self.images[idx].render()}")
        return "\n".join(lines)


def morphism_equal(first: Morphism, second: Morphism) -> bool:
    """Same signatures and the same image on every basis pure tensor."""
    return first == second


def _apply_event(
    cube: FrobeniusHypercube,
    element: TensorElement,
    cell,
    pos: int,
    left: frozenset,
    new_signature: PathSignature,
) -> TensorElement:
    one = Polynomial.one(cube.nvars)
    if isinstance(cell, Box):
        return element.multiply_at(pos, cell.poly)
    terms = []
    if isinstance(cell, Cup):
        if cell.clockwise:
            inserts = [(one, one)]
        else:
            inserts = list(cube.edge(left, cell.color).coproduct_pairs())
        for factors, tail in element.terms:
            for x, y in inserts:
                terms.append((factors[:pos] + (x, y) + factors[pos:], tail))
        return TensorElement(new_signature, terms, check=False)
    if isinstance(cell, Cap):
        edge = cube.edge(left - {cell.color}, cell.color) if cell.clockwise else None
        for factors, tail in element.terms:
            product = factors[pos] * factors[pos + 1]
            value = edge.trace(product) if edge is not None else product
            rest = factors[:pos] + factors[pos + 2:]
            if pos < len(rest):
                rest = rest[:pos] + (value * rest[pos],) + rest[pos + 1:]
                terms.append((rest, tail))
            else:
                terms.append((rest, value * tail))
        return TensorElement(new_signature, terms, check=False)
    if isinstance(cell, Cross):
        if cell.kind == "left":
            pocket = left - {cell.left_color}
            expand_edge = cube.edge(left, cell.right_color)
            trace_edge = cube.edge(pocket, cell.right_color)
            pairs = expand_edge.coproduct_pairs()
            for factors, tail in element.terms:
                product = factors[pos] * factors[pos + 1]
                for x, y in pairs:
                    traced = trace_edge.trace(product * y)
                    terms.append(
                        (factors[:pos] + (x, traced) + factors[pos + 2:], tail)
                    )
            return TensorElement(new_signature, terms, check=False)
        for factors, tail in element.terms:
            product = factors[pos] * factors[pos + 1]
            if cell.kind == "down":
                swapped = (one, product)
            else:
                swapped = (product, one)
            terms.append((factors[:pos] + swapped + factors[pos + 2:], tail))
        return TensorElement(new_signature, terms, check=False)
    raise MembershipError(f"cannot evaluate cell {cell!r}")


def generator_morphism(cube: FrobeniusHypercube, cell, left: frozenset) -> Morphism:
    """The local morphism of a single cell with the given region at its left."""
    left = cube.validate_subset(left)
    wrapper = Diagram(left, [[cell]])
    return evaluate(cube, wrapper)


def evaluate(cube: FrobeniusHypercube, d: Diagram) -> Morphism:
    """The linear map of a diagram, built slice by slice.

    Region labels come from the consistency check; each basis pure
    tensor of the bottom boundary is pushed through every slice and
    renormalized after each step.
    """
    labels = check_consistency(d, cube)
    signatures = [PathSignature(cube, level) for level in labels.levels]
    domain = signatures[0]
    events = []
    for row in labels.placements:
        found = [p for p in row if not isinstance(p.cell, Id)]
        events.append(found[0] if found else None)
    images = {}
    for idx in domain_indices(domain):
        element = TensorElement.pure(domain, basis_factors(domain, idx))
        for k, placement in enumerate(events):
            if placement is None:
                continue
            element = _apply_event(
                cube,
                element,
                placement.cell,
                placement.bottom_pos,
                placement.left_region,
                signatures[k + 1],
            ).normalized()
        images[idx] = element
    return Morphism(domain, signatures[-1], images)
